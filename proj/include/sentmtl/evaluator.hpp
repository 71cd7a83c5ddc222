#ifndef SENTMTL_EVALUATOR_HPP
#define SENTMTL_EVALUATOR_HPP

#include <array>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentmtl/corpus.hpp"
#include "sentmtl/errors.hpp"

namespace sentmtl {

/// Rows are gold labels, columns are predictions, both in the fixed label
/// order negative/neutral/positive.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, 3>, 3> counts{};

    std::uint64_t total() const
    {
        std::uint64_t sum = 0;
        for (const auto& row : counts) {
            for (const auto c : row) sum += c;
        }
        return sum;
    }

    std::uint64_t& at(SentimentLabel gold, SentimentLabel predicted)
    {
        return counts[static_cast<std::size_t>(gold)][static_cast<std::size_t>(predicted)];
    }

    std::uint64_t at(SentimentLabel gold, SentimentLabel predicted) const
    {
        return counts[static_cast<std::size_t>(gold)][static_cast<std::size_t>(predicted)];
    }
};

inline ConfusionMatrix confusion(std::span<const SentimentLabel> gold,
                                 std::span<const SentimentLabel> predicted)
{
    if (gold.size() != predicted.size()) {
        throw ShapeError("confusion: gold and predicted lengths differ");
    }
    if (gold.empty()) {
        throw ShapeError("confusion: empty label lists");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++cm.at(gold[i], predicted[i]);
    }
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;  // fractions in [0,1]; rendering converts to percent
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct MetricsReport {
    std::array<ClassMetrics, 3> per_class{};  // indexed by SentimentLabel
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::uint64_t evaluated = 0;

    const ClassMetrics& of(SentimentLabel label) const
    {
        return per_class[static_cast<std::size_t>(label)];
    }
};

/// Per-class precision/recall/F1 with the zero-denominator convention
/// (0 when a column or row sum is 0), macro values as unweighted means.
inline MetricsReport macro_prf(const ConfusionMatrix& cm)
{
    if (cm.total() == 0) {
        throw ShapeError("macro_prf: empty confusion matrix");
    }
    MetricsReport report;
    report.evaluated = cm.total();
    for (const SentimentLabel label : kAllLabels) {
        const auto l = static_cast<std::size_t>(label);
        std::uint64_t row_sum = 0;
        std::uint64_t col_sum = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            row_sum += cm.counts[l][j];
            col_sum += cm.counts[j][l];
        }
        const auto diag = static_cast<double>(cm.counts[l][l]);
        ClassMetrics& m = report.per_class[l];
        m.support = row_sum;
        m.precision = col_sum == 0 ? 0.0 : diag / static_cast<double>(col_sum);
        m.recall = row_sum == 0 ? 0.0 : diag / static_cast<double>(row_sum);
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        report.macro_precision += m.precision / 3.0;
        report.macro_recall += m.recall / 3.0;
        report.macro_f1 += m.f1 / 3.0;
    }
    return report;
}

inline MetricsReport macro_prf(std::span<const SentimentLabel> gold,
                               std::span<const SentimentLabel> predicted)
{
    return macro_prf(confusion(gold, predicted));
}

/// Most frequent training label; ties break toward the fixed label order
/// (negative < neutral < positive).
inline SentimentLabel majority_label(std::span<const SentimentLabel> train_labels)
{
    if (train_labels.empty()) {
        throw ShapeError("majority_label: empty training labels");
    }
    std::array<std::uint64_t, 3> counts{};
    for (const SentimentLabel l : train_labels) {
        ++counts[static_cast<std::size_t>(l)];
    }
    SentimentLabel best = SentimentLabel::negative;
    for (const SentimentLabel label : kAllLabels) {
        if (counts[static_cast<std::size_t>(label)] > counts[static_cast<std::size_t>(best)]) {
            best = label;
        }
    }
    return best;
}

/// The baseline: predict the most frequent training label for every test
/// instance, then score with macro_prf.
inline MetricsReport majority_baseline(std::span<const SentimentLabel> train_labels,
                                       std::span<const SentimentLabel> test_gold)
{
    if (test_gold.empty()) {
        throw ShapeError("majority_baseline: empty test gold");
    }
    const SentimentLabel majority = majority_label(train_labels);
    const std::vector<SentimentLabel> predicted(test_gold.size(), majority);
    return macro_prf(test_gold, predicted);
}

/// Round-half-even to two decimals, as used for every rendered percent.
inline double round2(double value)
{
    const int prev = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double scaled = std::nearbyint(value * 100.0);
    std::fesetround(prev);
    return scaled / 100.0;
}

inline std::string format_percent(double fraction)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", round2(fraction * 100.0));
    return buf;
}

inline nlohmann::json metrics_to_json(const MetricsReport& report)
{
    nlohmann::json per_class = nlohmann::json::object();
    for (const SentimentLabel label : kAllLabels) {
        const ClassMetrics& m = report.of(label);
        per_class[to_string(label)] = {
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"support", m.support},
        };
    }
    return nlohmann::json{
        {"per_class", per_class},
        {"macro", {{"precision", report.macro_precision},
                   {"recall", report.macro_recall},
                   {"f1", report.macro_f1}}},
        {"evaluated", report.evaluated},
    };
}

inline MetricsReport metrics_from_json(const nlohmann::json& j)
{
    MetricsReport report;
    for (const SentimentLabel label : kAllLabels) {
        const auto& m = j.at("per_class").at(to_string(label));
        ClassMetrics& out = report.per_class[static_cast<std::size_t>(label)];
        out.precision = m.at("precision").get<double>();
        out.recall = m.at("recall").get<double>();
        out.f1 = m.at("f1").get<double>();
        out.support = m.at("support").get<std::uint64_t>();
    }
    report.macro_precision = j.at("macro").at("precision").get<double>();
    report.macro_recall = j.at("macro").at("recall").get<double>();
    report.macro_f1 = j.at("macro").at("f1").get<double>();
    report.evaluated = j.at("evaluated").get<std::uint64_t>();
    return report;
}

/// Rows are train-set labels (scenario or baseline), column triples are
/// (P, R, F1) per test set, percent with two decimals.
inline std::string render_report_table(
    const std::vector<std::string>& test_sets,
    const std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>>& rows)
{
    std::vector<std::size_t> widths;
    std::string out;
    const std::string row_header = "Train set";
    std::size_t first_col = row_header.size();
    for (const auto& [name, cells] : rows) {
        first_col = std::max(first_col, name.size());
    }

    const auto pad = [](std::string s, std::size_t width) {
        while (s.size() < width) s.push_back(' ');
        return s;
    };

    out += pad(row_header, first_col);
    for (const auto& set_name : test_sets) {
        const std::size_t cell = std::max<std::size_t>(set_name.size(), 26);
        widths.push_back(cell);
        out += " | " + pad(set_name + " (P / R / F1)", cell);
    }
    out += "\n";
    out += std::string(out.size() - 1, '-') + "\n";

    for (const auto& [name, cells] : rows) {
        out += pad(name, first_col);
        for (std::size_t i = 0; i < test_sets.size(); ++i) {
            const auto it = cells.find(test_sets[i]);
            std::string cell;
            if (it == cells.end()) {
                cell = "- / - / -";
            } else {
                cell = format_percent(it->second.macro_precision) + " / "
                       + format_percent(it->second.macro_recall) + " / "
                       + format_percent(it->second.macro_f1);
            }
            out += " | " + pad(cell, widths[i]);
        }
        out += "\n";
    }
    return out;
}

}  // namespace sentmtl

#endif  // SENTMTL_EVALUATOR_HPP
