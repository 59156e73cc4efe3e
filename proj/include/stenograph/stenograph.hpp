#pragma once

#include "stenograph/augment.hpp"
#include "stenograph/autodiff.hpp"
#include "stenograph/checkpoint.hpp"
#include "stenograph/cohort.hpp"
#include "stenograph/common.hpp"
#include "stenograph/dataset_io.hpp"
#include "stenograph/digest.hpp"
#include "stenograph/evaluate.hpp"
#include "stenograph/explain.hpp"
#include "stenograph/folds.hpp"
#include "stenograph/gradcheck.hpp"
#include "stenograph/metrics.hpp"
#include "stenograph/mtl.hpp"
#include "stenograph/net1d.hpp"
#include "stenograph/report.hpp"
#include "stenograph/rng.hpp"
#include "stenograph/survival.hpp"
#include "stenograph/svg.hpp"
#include "stenograph/synthgen.hpp"
#include "stenograph/tensor.hpp"
#include "stenograph/trainer.hpp"
