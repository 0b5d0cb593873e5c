#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csma/label.hpp"

namespace csma {

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// Adult is the positive class throughout.
struct EvalReport {
  std::array<std::array<std::size_t, 2>, 2> confusion{};  // [actual][predicted]
  double acc_minor = 0.0;       // percent
  double acc_adult = 0.0;       // percent
  double mean_accuracy = 0.0;   // (acc_minor + acc_adult) / 2
  double minor_misclassification_rate = 0.0;  // percent of minors predicted adult
  std::vector<RocPoint> roc;    // thresholds descending, (0,0) ... (1,1)
  double auc = 0.0;

  std::size_t total() const noexcept;
};

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  double p_value = 1.0;
  bool significant_at_95 = false;
};

double mean_class_accuracy(double acc_minor, double acc_adult) noexcept;

/// Errors: ErrorKind::consistency on length mismatch, ErrorKind::insufficient
/// when labels hold a single class.
EvalReport evaluate(std::span<const Label> predictions, std::span<const double> scores,
                    std::span<const Label> labels);

/// Sweeps every distinct score as a threshold (predict adult iff
/// score >= threshold), plus sentinels just above the maximum and just below
/// the minimum.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels);
/// Trapezoidal area under an ROC curve.
double roc_auc(std::span<const RocPoint> roc);

/// Two-sided exact binomial p-value for b vs c discordant pairs:
/// min(1, 2 * P[X <= min(b, c)]), X ~ Binomial(b + c, 1/2). b = c = 0 gives 1.
double mcnemar_exact_p(std::size_t b, std::size_t c);
McNemarResult mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b);

double minor_misclassification_rate(std::span<const Label> predictions,
                                    std::span<const Label> labels);

/// Two-decimal display with half-up rounding of the decimal value, so 92.085
/// prints as "92.09" even though its nearest double lies just below.
std::string format_percent(double value);

/// Flat key=value report.
void write_report(std::ostream& out, const EvalReport& report);
/// CSV with header threshold,fpr,tpr.
void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc);
void write_mcnemar(std::ostream& out, const McNemarResult& result);

}  // namespace csma
