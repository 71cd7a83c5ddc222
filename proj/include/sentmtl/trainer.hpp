#ifndef SENTMTL_TRAINER_HPP
#define SENTMTL_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentmtl/corpus.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/evaluator.hpp"
#include "sentmtl/model.hpp"
#include "sentmtl/optimizer.hpp"
#include "sentmtl/preprocess.hpp"
#include "sentmtl/rng.hpp"

namespace sentmtl {

/// The five training scenarios. Zero-shot scenarios never see Croatian
/// data in any training or dev pool; STL scenarios instantiate only the
/// document head, MTL scenarios all three.
enum class Scenario {
    sl_stl_zero_hr,  // Slovene documents only, zero-shot for Croatian
    sl_mtl_zero_hr,  // all three Slovene levels, zero-shot for Croatian
    hr_stl,          // Croatian documents only
    slhr_mtl,        // Croatian+Slovene documents plus Slovene paragraph/sentence
    slhr_stl,        // Croatian+Slovene documents, single head
};

inline constexpr std::array<Scenario, 5> kAllScenarios = {
    Scenario::sl_stl_zero_hr, Scenario::sl_mtl_zero_hr, Scenario::hr_stl,
    Scenario::slhr_mtl, Scenario::slhr_stl};

inline const char* to_string(Scenario s)
{
    switch (s) {
        case Scenario::sl_stl_zero_hr: return "SL_STL_ZERO_HR";
        case Scenario::sl_mtl_zero_hr: return "SL_MTL_ZERO_HR";
        case Scenario::hr_stl: return "HR_STL";
        case Scenario::slhr_mtl: return "SLHR_MTL";
        case Scenario::slhr_stl: return "SLHR_STL";
    }
    return "?";
}

inline std::string scenario_names_joined()
{
    std::string out;
    for (const Scenario s : kAllScenarios) {
        if (!out.empty()) out += ", ";
        out += to_string(s);
    }
    return out;
}

inline Scenario parse_scenario(std::string_view name)
{
    for (const Scenario s : kAllScenarios) {
        if (name == to_string(s)) return s;
    }
    throw ConfigError("unknown scenario '" + std::string(name) + "' (valid: "
                      + scenario_names_joined() + ")");
}

inline bool is_multi_task(Scenario s)
{
    return s == Scenario::sl_mtl_zero_hr || s == Scenario::slhr_mtl;
}

inline bool is_zero_shot(Scenario s)
{
    return s == Scenario::sl_stl_zero_hr || s == Scenario::sl_mtl_zero_hr;
}

inline bool uses_croatian_documents(Scenario s)
{
    return s == Scenario::hr_stl || s == Scenario::slhr_mtl || s == Scenario::slhr_stl;
}

inline bool uses_slovene_documents(Scenario s)
{
    return s != Scenario::hr_stl;
}

inline std::set<Granularity> scenario_heads(Scenario s)
{
    if (is_multi_task(s)) {
        return {Granularity::document, Granularity::paragraph, Granularity::sentence};
    }
    return {Granularity::document};
}

/// Single-task runs train longer than multi-task runs; the multi-task
/// population is far larger per epoch, and fewer passes avoid overfitting.
inline int default_epochs(Scenario s)
{
    return is_multi_task(s) ? 3 : 5;
}

enum class SelectionMetric { document_macro_f1, mean_macro_f1 };

inline const char* to_string(SelectionMetric m)
{
    return m == SelectionMetric::document_macro_f1 ? "document_macro_f1" : "mean_macro_f1";
}

inline std::optional<SelectionMetric> parse_selection_metric(std::string_view token)
{
    if (token == "document_macro_f1") return SelectionMetric::document_macro_f1;
    if (token == "mean_macro_f1") return SelectionMetric::mean_macro_f1;
    return std::nullopt;
}

struct TrainConfig {
    double learning_rate = 2e-5;
    int batch_size = 32;
    std::optional<int> epochs;  // scenario default when unset
    std::uint64_t seed = 0;
    double dropout_rate = 0.3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    SelectionMetric selection = SelectionMetric::document_macro_f1;

    AdamConfig adam() const
    {
        return AdamConfig{learning_rate, adam_beta1, adam_beta2, adam_epsilon};
    }

    void validate() const
    {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (epochs && *epochs < 1) throw ConfigError("epochs must be at least 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
            throw ConfigError("dropout_rate must lie in [0,1)");
        }
    }
};

struct StepRecord {
    std::uint64_t step = 0;  // 1-based, global across epochs
    int epoch = 0;
    Granularity task = Granularity::document;
    std::size_t batch_size = 0;
    std::size_t sl_instances = 0;
    std::size_t hr_instances = 0;
    double loss = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    std::map<Granularity, MetricsReport> dev_metrics;
    // language-separated document diagnostics for the mixed scenarios
    std::map<std::string, MetricsReport> dev_diagnostics;
    double selection_value = 0.0;
    std::string checkpoint_id;
};

struct RunHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    std::string selected_checkpoint;
};

/// Draws a task key with probability sizes[k] / total. The distribution is
/// over the collection's recorded sizes, independent of consumption state.
inline Granularity sample_task(const TaskCollection& collection, Rng& rng)
{
    std::uint64_t total = 0;
    for (const auto& [task, size] : collection.sizes) total += size;
    if (total == 0) {
        throw ExhaustionError("sample_task: every pool is empty");
    }
    std::uint64_t draw = rng.bounded(total);
    for (const auto& [task, size] : collection.sizes) {
        if (draw < size) return task;
        draw -= size;
    }
    return collection.sizes.rbegin()->first;  // unreachable
}

/// Training inputs: one cleaned-and-split dataset per (language, level)
/// pool, keyed "sl_doc" / "sl_para" / "sl_sent" / "hr_doc". A scenario only
/// requires the pools it trains on.
struct ScenarioData {
    std::map<std::string, DatasetSplit> splits;

    const DatasetSplit& require(const std::string& key, Scenario scenario) const
    {
        const auto it = splits.find(key);
        if (it == splits.end()) {
            throw ConfigError(std::string("scenario ") + to_string(scenario)
                              + " needs pool '" + key + "' which is not prepared");
        }
        return it->second;
    }
};

/// Pools and dev sets a scenario actually trains and selects on.
struct ScenarioPlan {
    TaskCollection collection;
    std::map<Granularity, std::vector<LabeledInstance>> dev_sets;
    std::map<std::string, std::vector<LabeledInstance>> dev_diagnostics;
};

/// Builds the train pools and dev sets for a scenario. The mixed scenarios
/// concatenate Croatian and Slovene document train sets and shuffle the
/// result; their dev sets are kept language-separated for diagnostics while
/// selection uses the union.
inline ScenarioPlan assemble_scenario(Scenario scenario, const ScenarioData& data,
                                      std::uint64_t seed)
{
    ScenarioPlan plan;
    std::vector<std::pair<Granularity, DatasetSplit>> pools;

    DatasetSplit doc_split;
    if (uses_slovene_documents(scenario)) {
        const DatasetSplit& sl = data.require("sl_doc", scenario);
        doc_split.train.insert(doc_split.train.end(), sl.train.begin(), sl.train.end());
        doc_split.dev.insert(doc_split.dev.end(), sl.dev.begin(), sl.dev.end());
        plan.dev_diagnostics["sl_doc"] = sl.dev;
    }
    if (uses_croatian_documents(scenario)) {
        const DatasetSplit& hr = data.require("hr_doc", scenario);
        doc_split.train.insert(doc_split.train.end(), hr.train.begin(), hr.train.end());
        doc_split.dev.insert(doc_split.dev.end(), hr.dev.begin(), hr.dev.end());
        plan.dev_diagnostics["hr_doc"] = hr.dev;
    }
    if (uses_slovene_documents(scenario) && uses_croatian_documents(scenario)) {
        Rng rng(mix_seed(seed, "concat:document"));
        rng.shuffle(doc_split.train);
    }
    pools.emplace_back(Granularity::document, doc_split);
    plan.dev_sets[Granularity::document] = doc_split.dev;

    if (is_multi_task(scenario)) {
        const DatasetSplit& para = data.require("sl_para", scenario);
        const DatasetSplit& sent = data.require("sl_sent", scenario);
        pools.emplace_back(Granularity::paragraph, para);
        pools.emplace_back(Granularity::sentence, sent);
        plan.dev_sets[Granularity::paragraph] = para.dev;
        plan.dev_sets[Granularity::sentence] = sent.dev;
    }

    plan.collection = build_collection(pools);

    if (is_zero_shot(scenario)) {
        for (const auto& [task, pool] : plan.collection.pools) {
            for (const auto& inst : pool) {
                if (inst.language == Language::hr) {
                    throw ConfigError("zero-shot scenario assembled a Croatian instance; "
                                      "the prepared pools are mislabeled");
                }
            }
        }
    }
    return plan;
}

inline ModelBundle make_scenario_bundle(Scenario scenario, const EncoderSpec& encoder,
                                        const TrainConfig& config)
{
    return make_bundle(encoder, scenario_heads(scenario), config.seed, config.dropout_rate);
}

/// Scores one dev set with the current parameters (eval mode).
inline MetricsReport evaluate_instances(const ModelBundle& bundle, Granularity task,
                                        std::span<const LabeledInstance> instances)
{
    if (instances.empty()) {
        throw StateError("cannot evaluate an empty instance list");
    }
    std::vector<std::string> texts;
    std::vector<SentimentLabel> gold;
    texts.reserve(instances.size());
    gold.reserve(instances.size());
    for (const auto& inst : instances) {
        texts.push_back(inst.text);
        gold.push_back(inst.label);
    }
    const PredictionBatch batch = predict(texts, bundle, task);
    return macro_prf(gold, batch.predicted);
}

inline double selection_value(const EpochRecord& record, SelectionMetric metric)
{
    if (metric == SelectionMetric::document_macro_f1) {
        const auto it = record.dev_metrics.find(Granularity::document);
        if (it == record.dev_metrics.end()) {
            throw StateError("epoch record lacks document dev metrics");
        }
        return it->second.macro_f1;
    }
    double sum = 0.0;
    for (const auto& [task, report] : record.dev_metrics) sum += report.macro_f1;
    return record.dev_metrics.empty() ? 0.0 : sum / static_cast<double>(record.dev_metrics.size());
}

/// Checkpoint with the maximal selection metric; ties break toward the
/// earlier epoch.
inline std::string select_best(const RunHistory& history, SelectionMetric metric)
{
    if (history.epochs.empty()) {
        throw StateError("select_best: history has no epoch records");
    }
    const EpochRecord* best = &history.epochs.front();
    double best_value = selection_value(*best, metric);
    for (const EpochRecord& record : history.epochs) {
        const double value = selection_value(record, metric);
        if (value > best_value) {
            best = &record;
            best_value = value;
        }
    }
    return best->checkpoint_id;
}

struct TrainHooks {
    // called after each epoch's dev evaluation with a copy-ready bundle
    std::function<void(const EpochRecord&, const ModelBundle&)> on_epoch;
};

struct TrainResult {
    ModelBundle best;
    RunHistory history;
};

/// Runs one scenario: per step, a task is sampled size-proportionally, the
/// next batch comes from that task's per-epoch shuffled cursor, and one
/// optimizer update is applied to the shared layer plus that task's head.
/// Every pool instance is consumed exactly once per epoch (a task leaves
/// the candidate set once its cursor is exhausted, so each pool ends with
/// at most one partial batch). Deterministic for fixed (scenario, data,
/// seed, config).
inline TrainResult train_scenario(Scenario scenario, const ScenarioData& data,
                                  ModelBundle bundle, const TrainConfig& config,
                                  const TrainHooks& hooks = {})
{
    config.validate();
    const ScenarioPlan plan = assemble_scenario(scenario, data, config.seed);

    const auto expected_heads = scenario_heads(scenario);
    for (const Granularity task : expected_heads) {
        if (bundle.heads.count(task) == 0) {
            throw ConfigError(std::string("bundle lacks the ") + to_string(task)
                              + " head required by " + to_string(scenario));
        }
    }
    if (bundle.heads.size() != expected_heads.size()) {
        throw ConfigError(std::string("bundle instantiates heads the scenario ")
                          + to_string(scenario) + " does not train");
    }
    for (const auto& [task, pool] : plan.collection.pools) {
        if (pool.empty()) {
            throw ConfigError(std::string("training pool for task '") + to_string(task)
                              + "' is empty");
        }
    }

    const int epochs = config.epochs.value_or(default_epochs(scenario));
    const auto batch_size = static_cast<std::size_t>(config.batch_size);

    BundleOptimizer optimizer(config.adam());
    Rng task_rng(mix_seed(config.seed, "task_sampling"));
    Rng dropout_rng(mix_seed(config.seed, "dropout"));

    RunHistory history;
    std::map<std::string, ModelBundle> checkpoints;
    std::uint64_t global_step = 0;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        // per-epoch shuffled cursors over every pool
        std::map<Granularity, std::vector<std::size_t>> order;
        std::map<Granularity, std::size_t> cursor;
        TaskCollection active;  // tasks with instances left this epoch
        for (const auto& [task, pool] : plan.collection.pools) {
            auto& idx = order[task];
            idx.resize(pool.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            Rng shuffle_rng(mix_seed(config.seed, std::string("epoch_shuffle:") + to_string(task),
                                     static_cast<std::uint64_t>(epoch)));
            shuffle_rng.shuffle(idx);
            cursor[task] = 0;
            active.sizes[task] = pool.size();
        }

        while (!active.sizes.empty()) {
            const Granularity task = sample_task(active, task_rng);
            const auto& pool = plan.collection.pools.at(task);
            const auto& idx = order.at(task);
            std::size_t& pos = cursor.at(task);
            const std::size_t take = std::min(batch_size, idx.size() - pos);

            std::vector<std::string> texts;
            std::vector<SentimentLabel> gold;
            texts.reserve(take);
            gold.reserve(take);
            StepRecord record;
            for (std::size_t i = 0; i < take; ++i) {
                const LabeledInstance& inst = pool[idx[pos + i]];
                texts.push_back(inst.text);
                gold.push_back(inst.label);
                if (inst.language == Language::hr) {
                    ++record.hr_instances;
                } else {
                    ++record.sl_instances;
                }
            }
            pos += take;
            if (pos == idx.size()) {
                active.sizes.erase(task);
            }

            const Matrix raw = encode(texts, bundle.encoder, Mode::train);
            const ForwardCache cache =
                forward_cached(raw, bundle, task, Mode::train, &dropout_rng);
            const double loss = compute_loss(cache.batch, gold);
            record.step = ++global_step;
            record.epoch = epoch;
            record.task = task;
            record.batch_size = take;
            record.loss = loss;
            if (!std::isfinite(loss)) {
                throw DivergenceError(std::string("non-finite loss at step ")
                                      + std::to_string(record.step) + " (task "
                                      + to_string(task) + ")");
            }
            const Gradients grads = backward(cache, gold, bundle, task);
            optimizer.apply(bundle, task, grads);
            history.steps.push_back(std::move(record));
        }

        EpochRecord epoch_record;
        epoch_record.epoch = epoch;
        epoch_record.checkpoint_id = "epoch_" + std::to_string(epoch);
        for (const auto& [task, dev] : plan.dev_sets) {
            epoch_record.dev_metrics[task] = evaluate_instances(bundle, task, dev);
        }
        if (plan.dev_diagnostics.size() > 1) {
            for (const auto& [name, dev] : plan.dev_diagnostics) {
                epoch_record.dev_diagnostics[name] =
                    evaluate_instances(bundle, Granularity::document, dev);
            }
        }
        epoch_record.selection_value = selection_value(epoch_record, config.selection);
        checkpoints.emplace(epoch_record.checkpoint_id, bundle);
        if (hooks.on_epoch) {
            hooks.on_epoch(epoch_record, bundle);
        }
        history.epochs.push_back(std::move(epoch_record));
    }

    history.selected_checkpoint = select_best(history, config.selection);
    TrainResult result{checkpoints.at(history.selected_checkpoint), std::move(history)};
    return result;
}

// --- run history persistence -------------------------------------------------

/// One structured record per line: every step, then every epoch, then the
/// selected checkpoint.
inline std::string history_to_jsonl(const RunHistory& history)
{
    std::string out;
    for (const StepRecord& s : history.steps) {
        nlohmann::json j{
            {"type", "step"},       {"step", s.step},
            {"epoch", s.epoch},     {"task", to_string(s.task)},
            {"batch", s.batch_size}, {"sl", s.sl_instances},
            {"hr", s.hr_instances}, {"loss", s.loss},
        };
        out += j.dump() + "\n";
    }
    for (const EpochRecord& e : history.epochs) {
        nlohmann::json dev = nlohmann::json::object();
        for (const auto& [task, report] : e.dev_metrics) {
            dev[to_string(task)] = metrics_to_json(report);
        }
        nlohmann::json diag = nlohmann::json::object();
        for (const auto& [name, report] : e.dev_diagnostics) {
            diag[name] = metrics_to_json(report);
        }
        nlohmann::json j{
            {"type", "epoch"},
            {"epoch", e.epoch},
            {"dev", dev},
            {"selection_value", e.selection_value},
            {"checkpoint", e.checkpoint_id},
        };
        if (!e.dev_diagnostics.empty()) j["diagnostics"] = diag;
        out += j.dump() + "\n";
    }
    out += nlohmann::json{{"type", "selected"}, {"checkpoint", history.selected_checkpoint}}
               .dump()
           + "\n";
    return out;
}

inline RunHistory history_from_jsonl(const std::string& text)
{
    RunHistory history;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string_view line(text.data() + start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "step") {
            StepRecord s;
            s.step = j.at("step").get<std::uint64_t>();
            s.epoch = j.at("epoch").get<int>();
            const auto task = parse_granularity(j.at("task").get<std::string>());
            if (!task) throw StateError("history step names an unknown task");
            s.task = *task;
            s.batch_size = j.at("batch").get<std::size_t>();
            s.sl_instances = j.at("sl").get<std::size_t>();
            s.hr_instances = j.at("hr").get<std::size_t>();
            s.loss = j.at("loss").get<double>();
            history.steps.push_back(std::move(s));
        } else if (type == "epoch") {
            EpochRecord e;
            e.epoch = j.at("epoch").get<int>();
            for (const auto& [name, metrics] : j.at("dev").items()) {
                const auto task = parse_granularity(name);
                if (!task) throw StateError("history epoch names an unknown task");
                e.dev_metrics[*task] = metrics_from_json(metrics);
            }
            if (j.contains("diagnostics")) {
                for (const auto& [name, metrics] : j.at("diagnostics").items()) {
                    e.dev_diagnostics[name] = metrics_from_json(metrics);
                }
            }
            e.selection_value = j.at("selection_value").get<double>();
            e.checkpoint_id = j.at("checkpoint").get<std::string>();
            history.epochs.push_back(std::move(e));
        } else if (type == "selected") {
            history.selected_checkpoint = j.at("checkpoint").get<std::string>();
        }
    }
    return history;
}

}  // namespace sentmtl

#endif  // SENTMTL_TRAINER_HPP
