// Copyright 2026 The GenHMM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "common.hpp"

namespace genhmm_cli {

Confusion::Confusion(std::vector<std::string> labels)
    : labels_(std::move(labels)), cells_(labels_.size() * (labels_.size() + 1), 0) {}

void Confusion::add(int truth, int predicted) {
  const int n = classes();
  if (truth < 0 || truth >= n || predicted < -1 || predicted >= n) {
    throw std::out_of_range("confusion cell out of range");
  }
  cells_[truth * (n + 1) + (predicted < 0 ? n : predicted)] += 1;
}

long Confusion::at(int truth, int predicted) const { return cells_[truth * (classes() + 1) + predicted]; }

long Confusion::unclassifiable(int truth) const { return cells_[truth * (classes() + 1) + classes()]; }

long Confusion::row_total(int truth) const {
  long sum = 0;
  for (int j = 0; j <= classes(); ++j) sum += cells_[truth * (classes() + 1) + j];
  return sum;
}

long Confusion::column_total(int predicted) const {
  long sum = 0;
  for (int i = 0; i < classes(); ++i) sum += at(i, predicted);
  return sum;
}

long Confusion::total() const {
  long sum = 0;
  for (long v : cells_) sum += v;
  return sum;
}

MetricsReport compute_metrics(const Confusion& c) {
  MetricsReport r;
  const int n = c.classes();
  long correct = 0;
  for (int i = 0; i < n; ++i) {
    ClassMetrics m;
    m.label = c.labels()[i];
    m.count = c.row_total(i);
    const long tp = c.at(i, i);
    const long predicted = c.column_total(i);
    m.precision = predicted > 0 ? double(tp) / double(predicted) : 0.0;
    m.recall = m.count > 0 ? double(tp) / double(m.count) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    correct += tp;
    r.unclassifiable += c.unclassifiable(i);
    r.macro_precision += m.precision;
    r.macro_f1 += m.f1;
    r.per_class.push_back(m);
  }
  if (n > 0) {
    r.macro_precision /= n;
    r.macro_f1 /= n;
  }
  const long total = c.total();
  r.accuracy = total > 0 ? double(correct) / double(total) : 0.0;
  return r;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f%%", 100.0 * v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string rpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_table(const MetricsReport& r, const Confusion& c) {
  std::size_t w = 5;
  for (const auto& l : c.labels()) w = std::max(w, l.size());
  std::ostringstream out;
  out << pad("class", w) << "  " << rpad("count", 6) << "  " << rpad("accuracy", 9) << "  "
      << rpad("precision", 9) << "  " << rpad("f1", 9) << "\n";
  for (const auto& m : r.per_class) {
    out << pad(m.label, w) << "  " << rpad(std::to_string(m.count), 6) << "  " << rpad(pct(m.recall), 9)
        << "  " << rpad(pct(m.precision), 9) << "  " << rpad(pct(m.f1), 9) << "\n";
  }
  out << "\naccuracy        " << pct(r.accuracy) << "  (" << c.total() << " sequences)\n";
  out << "macro precision " << pct(r.macro_precision) << "\n";
  out << "macro f1        " << pct(r.macro_f1) << "\n";
  if (r.unclassifiable > 0) out << "unclassifiable  " << r.unclassifiable << "\n";

  out << "\nconfusion (rows: true, columns: predicted)\n" << pad("", w);
  const std::size_t cw = std::max<std::size_t>(w, 6);
  for (const auto& l : c.labels()) out << "  " << rpad(l, cw);
  out << "  " << rpad("none", cw) << "\n";
  for (int i = 0; i < c.classes(); ++i) {
    out << pad(c.labels()[i], w);
    for (int j = 0; j < c.classes(); ++j) out << "  " << rpad(std::to_string(c.at(i, j)), cw);
    out << "  " << rpad(std::to_string(c.unclassifiable(i)), cw) << "\n";
  }
  return out.str();
}

std::string format_keyvalue(const MetricsReport& r, const Confusion& c) {
  std::ostringstream out;
  out << "accuracy=" << format_real(r.accuracy) << "\n";
  out << "macro_precision=" << format_real(r.macro_precision) << "\n";
  out << "macro_f1=" << format_real(r.macro_f1) << "\n";
  out << "total=" << c.total() << "\n";
  out << "unclassifiable=" << r.unclassifiable << "\n";
  out << "classes=" << c.classes() << "\n";
  for (int i = 0; i < c.classes(); ++i) {
    const auto& m = r.per_class[i];
    const std::string p = "class." + std::to_string(i) + ".";
    out << p << "label=" << m.label << "\n";
    out << p << "count=" << m.count << "\n";
    out << p << "accuracy=" << format_real(m.recall) << "\n";
    out << p << "precision=" << format_real(m.precision) << "\n";
    out << p << "f1=" << format_real(m.f1) << "\n";
    out << p << "confusion=";
    for (int j = 0; j <= c.classes(); ++j) {
      if (j) out << ",";
      out << (j < c.classes() ? c.at(i, j) : c.unclassifiable(i));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace genhmm_cli
