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

#pragma once

#include <string>
#include <vector>

namespace genhmm_cli {

// rows: true class, columns: predicted class; one extra trailing column
// counts unclassifiable sequences.
class Confusion {
 public:
  explicit Confusion(std::vector<std::string> labels);

  void add(int truth, int predicted);  // predicted -1: unclassifiable

  int classes() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  long at(int truth, int predicted) const;
  long unclassifiable(int truth) const;
  long row_total(int truth) const;
  long column_total(int predicted) const;
  long total() const;

 private:
  std::vector<std::string> labels_;
  std::vector<long> cells_;  // classes x (classes + 1)
};

struct ClassMetrics {
  std::string label;
  long count = 0;
  double precision = 0.0;  // 0 when the class is never predicted
  double recall = 0.0;     // per-class accuracy
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_f1 = 0.0;
  long unclassifiable = 0;
  std::vector<ClassMetrics> per_class;
};

MetricsReport compute_metrics(const Confusion& confusion);

// Human-readable table.
std::string format_table(const MetricsReport& report, const Confusion& confusion);
// key=value lines (without metadata).
std::string format_keyvalue(const MetricsReport& report, const Confusion& confusion);

}  // namespace genhmm_cli
