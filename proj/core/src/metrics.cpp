// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "mdcpe/error.hpp"

namespace mdcpe {
namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyEvaluation("confusion matrix is empty");
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : classes_(classes), counts_(std::move(counts)) {
  if (counts_.size() != classes * classes)
    throw ShapeError("confusion matrix needs " + std::to_string(classes * classes) + " counts");
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < classes_; ++j) s += at(truth, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < classes_; ++i) s += at(i, predicted);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < classes_; ++i) s += at(i, i);
  return s;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t classes) {
  if (truth.size() != predicted.size())
    throw ShapeError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  ConfusionMatrix cm(classes);
  const int k = static_cast<int>(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t == 0) continue;
    if (t < 0 || t > k || p < 1 || p > k)
      throw InvalidClass("label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                         ") outside 1.." + std::to_string(k));
    ++cm.at(static_cast<std::size_t>(t - 1), static_cast<std::size_t>(p - 1));
  }
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

double average_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    const auto row = cm.row_sum(i);
    if (row == 0) continue;
    sum += static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
    ++present;
  }
  return sum / static_cast<double>(present);
}

double kappa(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  const double total = static_cast<double>(cm.total());
  const double po = static_cast<double>(cm.trace()) / total;
  double pe = 0.0;
  for (std::size_t i = 0; i < cm.classes(); ++i)
    pe += static_cast<double>(cm.row_sum(i)) * static_cast<double>(cm.col_sum(i));
  pe /= total * total;
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

std::vector<double> per_class_accuracy(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.classes(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    const auto row = cm.row_sum(i);
    if (row) out[i] = static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
  }
  return out;
}

std::string metrics_csv(const ConfusionMatrix& cm) {
  std::string out = "metric,value\n";
  out += "OA," + fixed6(overall_accuracy(cm)) + "\n";
  out += "AA," + fixed6(average_accuracy(cm)) + "\n";
  out += "Kappa," + fixed6(kappa(cm)) + "\n";
  const auto per_class = per_class_accuracy(cm);
  for (std::size_t i = 0; i < per_class.size(); ++i)
    out += "class_" + std::to_string(i + 1) + "," +
           (std::isnan(per_class[i]) ? std::string("nan") : fixed6(per_class[i])) + "\n";
  return out;
}

std::vector<Rgb> default_palette(std::size_t classes) {
  static constexpr Rgb base[] = {
      {230, 25, 75},   {60, 180, 75},  {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
      {145, 30, 180},  {70, 240, 240}, {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
      {0, 128, 128},   {220, 190, 255}, {170, 110, 40}, {255, 250, 200}, {128, 0, 0},
      {170, 255, 195}, {128, 128, 0},  {255, 215, 180}, {0, 0, 128},   {128, 128, 128}};
  std::vector<Rgb> palette{{0, 0, 0}};
  for (std::size_t c = 0; c < classes; ++c) {
    Rgb color = base[c % std::size(base)];
    // Darken repeats so colors stay distinct past the base table.
    const auto cycle = static_cast<unsigned>(c / std::size(base));
    for (auto& ch : color) ch = static_cast<std::uint8_t>(ch >> cycle);
    palette.push_back(color);
  }
  return palette;
}

std::string render_map(const LabelField& labels, std::span<const Rgb> palette) {
  const int max_label = labels.max_label();
  if (max_label > 0 && palette.size() <= static_cast<std::size_t>(max_label))
    throw InvalidConfig("palette has " + std::to_string(palette.size()) +
                        " entries; class " + std::to_string(max_label) + " needs one");
  std::string out = "P6\n" + std::to_string(labels.width()) + " " +
                    std::to_string(labels.height()) + "\n255\n";
  out.reserve(out.size() + 3 * labels.labels().size());
  for (auto l : labels.labels()) {
    const Rgb color = l == 0 ? Rgb{0, 0, 0} : palette[l];
    for (auto ch : color) out.push_back(static_cast<char>(ch));
  }
  return out;
}

}  // namespace mdcpe
