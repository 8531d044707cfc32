#pragma once

// Reference per-subject LOSOCV results for 31 subjects, used as an arithmetic
// oracle. Accuracies are percentages.

#include <array>

#include "forged/core.hpp"

namespace reference_results {

struct Row {
  const char* id;
  forged::ClassLabel label;
  double train_loss, train_acc, test_loss, test_acc;
};

inline constexpr forged::ClassLabel HC = forged::ClassLabel::HC;
inline constexpr forged::ClassLabel PD = forged::ClassLabel::PD;

inline constexpr std::array<Row, 31> kRows{{
    {"HC-S01", HC, 0.412, 90.58, 0.371, 95.83}, {"HC-S02", HC, 0.383, 92.9, 0.327, 98.97},
    {"HC-S03", HC, 0.393, 92.95, 0.313, 100},   {"HC-S04", HC, 0.425, 91.3, 1.201, 6.25},
    {"HC-S05", HC, 0.409, 90.72, 0.428, 90.53}, {"HC-S06", HC, 0.415, 90.43, 0.313, 100},
    {"HC-S07", HC, 0.411, 90.66, 0.313, 100},   {"HC-S08", HC, 0.420, 89.3, 0.314, 100},
    {"HC-S09", HC, 0.406, 91.06, 0.316, 100},   {"HC-S10", HC, 0.415, 89.8, 0.342, 96.88},
    {"HC-S11", HC, 0.411, 90.6, 0.328, 100},    {"HC-S12", HC, 0.411, 90.3, 0.313, 100},
    {"HC-S13", HC, 0.409, 91.2, 0.398, 90.43},  {"HC-S14", HC, 0.404, 90.86, 0.461, 87.1},
    {"HC-S15", HC, 0.408, 90.92, 0.360, 96.94}, {"HC-S16", HC, 0.415, 89.05, 0.313, 100},
    {"PD-S01", PD, 0.411, 90.67, 0.323, 100},   {"PD-S02", PD, 0.410, 90.95, 0.313, 100},
    {"PD-S03", PD, 0.416, 90.21, 0.336, 98.95}, {"PD-S04", PD, 0.418, 89.73, 0.354, 97.89},
    {"PD-S05", PD, 0.414, 90.49, 0.313, 100},   {"PD-S06", PD, 0.411, 91.04, 0.328, 100},
    {"PD-S07", PD, 0.392, 92.57, 1.313, 0},     {"PD-S08", PD, 0.406, 91.25, 0.497, 83.56},
    {"PD-S09", PD, 0.414, 90.02, 0.407, 89.36}, {"PD-S10", PD, 0.388, 93.25, 1.313, 0},
    {"PD-S11", PD, 0.411, 90.97, 0.411, 90.22}, {"PD-S12", PD, 0.413, 90.93, 0.398, 91.49},
    {"PD-S13", PD, 0.416, 90.08, 0.441, 90.2},  {"PD-S14", PD, 0.409, 90.65, 0.442, 86.32},
    {"PD-S15", PD, 0.414, 90.32, 0.314, 100},
}};

// Subjects whose listed prediction is the other class.
inline constexpr std::array<const char*, 3> kMisclassified{"HC-S04", "PD-S07", "PD-S10"};

// Listed averages.
inline constexpr double kMeanTrainLoss = 0.409, kMeanTrainAcc = 90.83, kMeanTestLoss = 0.449, kMeanTestAcc = 86.80;
inline constexpr double kSubjectAccuracy = 90.32;

}  // namespace reference_results
