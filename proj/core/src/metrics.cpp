// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mccbf Authors
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

#include "mccbf/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace mccbf::metrics {

double sinr_of(int n, int k, const FdBeamformers& bf, const ChannelSet& channels, double sigma2) {
  const auto& h = channels.h(n, n, k);
  const double signal = std::norm(h.dot(bf.at(n, k)));
  double interference = 0.0;
  for (int i = 0; i < bf.users; ++i) {
    if (i != k) interference += std::norm(h.dot(bf.at(n, i)));
  }
  for (int m = 0; m < bf.cells; ++m) {
    if (m == n) continue;
    const auto& hm = channels.h(m, n, k);
    for (int i = 0; i < bf.users; ++i) interference += std::norm(hm.dot(bf.at(m, i)));
  }
  return signal / (interference + sigma2);
}

Eigen::MatrixXd sinr(const FdBeamformers& bf, const ChannelSet& channels, const SystemConfig& cfg) {
  Eigen::MatrixXd out(bf.cells, bf.users);
  for (int n = 0; n < bf.cells; ++n) {
    for (int k = 0; k < bf.users; ++k) out(n, k) = sinr_of(n, k, bf, channels, cfg.sigma2(n, k));
  }
  return out;
}

double sum_rate(const Eigen::MatrixXd& sinrs) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < sinrs.size(); ++i) r += std::log2(1.0 + sinrs(i));
  return r;
}

double feasibility_rate(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) return 0.0;
  const auto ok = std::count(outcomes.begin(), outcomes.end(), true);
  return 100.0 * static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

double normalized_power_accuracy(double p_hat, double p_ref) { return std::abs(p_hat - p_ref) / p_ref; }

double to_dbm(double p_mw) { return 10.0 * std::log10(p_mw); }

std::uint64_t signaling_overhead(OverheadMode mode, int cells, int users, int antennas, int iterations) {
  const auto n = static_cast<std::uint64_t>(cells);
  const auto k = static_cast<std::uint64_t>(users);
  const auto t = static_cast<std::uint64_t>(antennas);
  const auto q = static_cast<std::uint64_t>(iterations);
  switch (mode) {
    case OverheadMode::Centralized:
      return 2 * t * k * n * (n - 1);
    case OverheadMode::Adbf:
      return n * k * q;
    case OverheadMode::PriorArt:
      return (n - 1) * n * k * q;
  }
  return 0;
}

std::vector<double> power_series(const ExperimentTrace& trace) {
  std::vector<double> out;
  for (const auto& r : trace.rows) {
    if (r.event == "iterate" || r.event == "cu_update") out.push_back(r.total_power);
  }
  return out;
}

int iterations_to_accuracy(const std::vector<double>& powers, double p_ref, double threshold) {
  int first = -1;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (normalized_power_accuracy(powers[i], p_ref) <= threshold) {
      if (first < 0) first = static_cast<int>(i) + 1;
    } else {
      first = -1;
    }
  }
  return first;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  SpearmanResult res;
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) return res;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return res;
  res.rho = sxy / std::sqrt(sxx * syy);
  const double df = static_cast<double>(n) - 2.0;
  const double r2 = std::min(res.rho * res.rho, 1.0 - 1e-15);
  const double t = res.rho * std::sqrt(df / (1.0 - r2));
  const boost::math::students_t dist(df);
  res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return res;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void write_sdbf_trace_csv(const ExperimentTrace& trace, std::ostream& os) {
  const auto old = os.precision(17);
  const std::size_t nb = trace.rows.empty() ? 0 : trace.rows.front().bs_power.size();
  os << "iteration";
  for (std::size_t n = 0; n < nb; ++n) os << ",p_" << n + 1;
  os << ",total_power,residual,feasible\n";
  for (const auto& r : trace.rows) {
    os << r.iteration;
    for (double p : r.bs_power) os << ',' << p;
    os << ',' << r.total_power << ',' << r.residual << ',' << (r.feasible ? 1 : 0) << '\n';
  }
  os.precision(old);
}

void write_adbf_trace_csv(const ExperimentTrace& trace, int cells, std::ostream& os) {
  const auto old = os.precision(17);
  os << "tick,cu_iter,event_type,bs_id,residual,total_power";
  for (int n = 0; n < cells; ++n) os << ",tau_" << n + 1;
  os << '\n';
  for (const auto& r : trace.rows) {
    os << r.tick << ',' << r.iteration << ',' << r.event << ',' << (r.bs_id >= 0 ? r.bs_id + 1 : 0) << ','
       << r.residual << ',' << r.total_power;
    for (int n = 0; n < cells; ++n) {
      os << ',' << (static_cast<std::size_t>(n) < r.tau.size() ? r.tau[static_cast<std::size_t>(n)] : 0);
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace mccbf::metrics
