#include "csma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "csma/error.hpp"

namespace csma {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::consistency, std::string(what) + ": length mismatch (" +
                                            std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

double percent(std::size_t part, std::size_t whole) {
  return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

double log_binomial_pmf_half(std::size_t n, std::size_t i) {
  const double nn = static_cast<double>(n);
  const double ii = static_cast<double>(i);
  return std::lgamma(nn + 1.0) - std::lgamma(ii + 1.0) - std::lgamma(nn - ii + 1.0) -
         nn * std::numbers::ln2;
}

}  // namespace

std::size_t EvalReport::total() const noexcept {
  return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
}

double mean_class_accuracy(double acc_minor, double acc_adult) noexcept {
  return (acc_minor + acc_adult) / 2.0;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  check_lengths(scores.size(), labels.size(), "roc_curve");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kAdult));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::insufficient, "roc_curve: labels contain a single class");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  const double top = scores[order.front()];
  const double bottom = scores[order.back()];
  std::vector<RocPoint> roc;
  roc.push_back({std::nextafter(top, INFINITY), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == kAdult ? tp : fp) += 1;
      ++i;
    }
    roc.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                   static_cast<double>(tp) / static_cast<double>(positives)});
  }
  roc.push_back({std::nextafter(bottom, -INFINITY), 1.0, 1.0});
  return roc;
}

double roc_auc(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  }
  return area;
}

EvalReport evaluate(std::span<const Label> predictions, std::span<const double> scores,
                    std::span<const Label> labels) {
  check_lengths(predictions.size(), labels.size(), "evaluate");
  check_lengths(scores.size(), labels.size(), "evaluate");
  EvalReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > kAdult || predictions[i] > kAdult) {
      throw Error(ErrorKind::validation, "evaluate: labels must be 0 or 1");
    }
    ++r.confusion[labels[i]][predictions[i]];
  }
  const std::size_t minors = r.confusion[kMinor][kMinor] + r.confusion[kMinor][kAdult];
  const std::size_t adults = r.confusion[kAdult][kMinor] + r.confusion[kAdult][kAdult];
  if (minors == 0 || adults == 0) {
    throw Error(ErrorKind::insufficient, "evaluate: labels contain a single class");
  }
  r.acc_minor = percent(r.confusion[kMinor][kMinor], minors);
  r.acc_adult = percent(r.confusion[kAdult][kAdult], adults);
  r.mean_accuracy = mean_class_accuracy(r.acc_minor, r.acc_adult);
  r.minor_misclassification_rate = percent(r.confusion[kMinor][kAdult], minors);
  r.roc = roc_curve(scores, labels);
  r.auc = roc_auc(r.roc);
  return r;
}

double mcnemar_exact_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(b, c);
  // log-sum-exp of the lower tail keeps large n from underflowing.
  std::vector<double> logs(k + 1);
  for (std::size_t i = 0; i <= k; ++i) logs[i] = log_binomial_pmf_half(n, i);
  const double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  const double tail = std::exp(peak + std::log(sum));
  return std::min(1.0, 2.0 * tail);
}

McNemarResult mcnemar_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
  check_lengths(correct_a.size(), correct_b.size(), "mcnemar_test");
  McNemarResult r;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++r.b;
    if (!correct_a[i] && correct_b[i]) ++r.c;
  }
  r.p_value = mcnemar_exact_p(r.b, r.c);
  r.significant_at_95 = r.p_value < 0.05;
  return r;
}

double minor_misclassification_rate(std::span<const Label> predictions,
                                    std::span<const Label> labels) {
  check_lengths(predictions.size(), labels.size(), "minor_misclassification_rate");
  std::size_t minors = 0, wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kMinor) continue;
    ++minors;
    if (predictions[i] == kAdult) ++wrong;
  }
  if (minors == 0) {
    throw Error(ErrorKind::insufficient, "minor_misclassification_rate: no minor samples");
  }
  return percent(wrong, minors);
}

std::string format_percent(double value) {
  // Snap to 9 decimals first so representation error cannot flip a half.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", std::fabs(value));
  std::string digits(buf);
  const auto dot = digits.find('.');
  std::string whole = digits.substr(0, dot);
  std::string frac = digits.substr(dot + 1, 2);
  const bool round_up = digits[dot + 3] >= '5';
  long long cents = std::stoll(whole) * 100 + std::stoll(frac) + (round_up ? 1 : 0);
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", (value < 0 && cents != 0) ? "-" : "",
                cents / 100, cents % 100);
  return buf;
}

void write_report(std::ostream& out, const EvalReport& r) {
  auto full = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "samples=" << r.total() << '\n'
      << "confusion_minor_minor=" << r.confusion[kMinor][kMinor] << '\n'
      << "confusion_minor_adult=" << r.confusion[kMinor][kAdult] << '\n'
      << "confusion_adult_minor=" << r.confusion[kAdult][kMinor] << '\n'
      << "confusion_adult_adult=" << r.confusion[kAdult][kAdult] << '\n'
      << "acc_minor=" << format_percent(r.acc_minor) << '\n'
      << "acc_adult=" << format_percent(r.acc_adult) << '\n'
      << "mean_accuracy=" << format_percent(r.mean_accuracy) << '\n'
      << "minor_misclassification_rate=" << format_percent(r.minor_misclassification_rate) << '\n'
      << "auc=" << full(r.auc) << '\n'
      << "mean_accuracy_exact=" << full(r.mean_accuracy) << '\n';
}

void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc) {
  out << "threshold,fpr,tpr\n";
  char buf[96];
  for (const auto& p : roc) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    out << buf;
  }
}

void write_mcnemar(std::ostream& out, const McNemarResult& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", r.p_value);
  out << "b=" << r.b << '\n'
      << "c=" << r.c << '\n'
      << "p_value=" << buf << '\n'
      << "significant_at_95=" << (r.significant_at_95 ? "yes" : "no") << '\n';
}

}  // namespace csma
