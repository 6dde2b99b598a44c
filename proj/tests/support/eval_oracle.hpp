#pragma once

#include <array>
#include <optional>
#include <vector>

#include "formdet/eval.hpp"

// Exhaustive reference implementation of detection matching and AP.
namespace oracle {

struct Box {
  double x, y, w, h;
};

double iou(const Box& a, const Box& b);

// Enumerates every partial injective det->gt assignment using only pairs with
// IoU >= thr, and returns the one whose per-detection keys (IoU, -gt index),
// read in rank order with "unmatched" lowest, are lexicographically largest.
// Result is indexed by input detection index.
std::vector<std::optional<std::size_t>> match(const std::vector<Box>& dets,
                                              const std::vector<double>& scores,
                                              const std::vector<Box>& gts, double thr);

// Mean over r in {0, .01, ..., 1} of the maximum precision among ranks whose
// recall is at least r, times 100.
std::optional<double> average_precision(const std::vector<bool>& ranked_tp, std::size_t total_gt);

struct ClassOutcome {
  std::size_t num_gt = 0, num_det = 0;
  std::array<double, 10> ap{};
  std::array<std::size_t, 10> tp{};
  double ap50_95 = 0;
};

struct Outcome {
  std::array<std::optional<ClassOutcome>, formdet::kNumFieldClasses> classes;
  std::optional<double> map;
};

Outcome evaluate(const std::vector<formdet::Detection>& dets,
                 const std::vector<formdet::GroundTruth>& gts,
                 const std::vector<formdet::ImageKey>& images);

}  // namespace oracle
