#ifndef SENTMTL_SENTMTL_HPP
#define SENTMTL_SENTMTL_HPP

// Umbrella header for the toolkit.

#include "sentmtl/commands.hpp"
#include "sentmtl/config.hpp"
#include "sentmtl/corpus.hpp"
#include "sentmtl/encoder.hpp"
#include "sentmtl/errors.hpp"
#include "sentmtl/evaluator.hpp"
#include "sentmtl/hash.hpp"
#include "sentmtl/io.hpp"
#include "sentmtl/linalg.hpp"
#include "sentmtl/model.hpp"
#include "sentmtl/optimizer.hpp"
#include "sentmtl/preprocess.hpp"
#include "sentmtl/rng.hpp"
#include "sentmtl/synthetic.hpp"
#include "sentmtl/text.hpp"
#include "sentmtl/trainer.hpp"
#include "sentmtl/version.hpp"

#endif  // SENTMTL_SENTMTL_HPP
