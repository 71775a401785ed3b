#pragma once

// Hypothesis spaces, p-value families and false-discovery accounting.
//
// A hypothesis space is finite: m labelled hypotheses, each carrying a volume
// weight Lambda({h}) > 0 and a prior weight pi(h) in [0,1]. The volume of a set
// S is |S| = sum of Lambda over S; its pi-volume is Pi(S) = sum Lambda*pi.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stepfdr/numeric.hpp"

namespace stepfdr {

class HypothesisSpace {
 public:
  HypothesisSpace(std::vector<std::string> labels, std::vector<double> lambda,
                  std::vector<double> pi)
      : labels_(std::move(labels)), lambda_(std::move(lambda)), pi_(std::move(pi)) {
    const std::size_t m = labels_.size();
    if (lambda_.size() != m || pi_.size() != m) {
      throw std::invalid_argument("HypothesisSpace: labels, lambda and pi must have equal length");
    }
    integer_lambda_ = true;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(lambda_[i] > 0.0) || !std::isfinite(lambda_[i])) {
        throw std::invalid_argument("HypothesisSpace: lambda of '" + labels_[i] +
                                    "' must be positive and finite");
      }
      if (!(pi_[i] >= 0.0 && pi_[i] <= 1.0)) {
        throw std::invalid_argument("HypothesisSpace: pi of '" + labels_[i] +
                                    "' must lie in [0,1]");
      }
      if (lambda_[i] != std::floor(lambda_[i])) integer_lambda_ = false;
      if (!index_.emplace(labels_[i], i).second) {
        throw std::invalid_argument("HypothesisSpace: duplicate label '" + labels_[i] + "'");
      }
      total_volume_ += lambda_[i];
    }
    if (!std::isfinite(total_volume_)) {
      throw std::invalid_argument("HypothesisSpace: total volume is not finite");
    }
  }

  // Lambda = counting measure, pi = 1/m; labels h1..hm.
  static HypothesisSpace standard(std::size_t m) {
    return standard(default_labels(m));
  }

  static HypothesisSpace standard(std::vector<std::string> labels) {
    const std::size_t m = labels.size();
    const double w = m == 0 ? 0.0 : 1.0 / static_cast<double>(m);
    return HypothesisSpace(std::move(labels), std::vector<double>(m, 1.0),
                           std::vector<double>(m, w));
  }

  static std::vector<std::string> default_labels(std::size_t m) {
    std::vector<std::string> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back("h" + std::to_string(i + 1));
    return out;
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::span<const double> lambda() const { return lambda_; }
  std::span<const double> pi() const { return pi_; }
  double lambda(std::size_t i) const { return lambda_.at(i); }
  double pi(std::size_t i) const { return pi_.at(i); }

  double total_volume() const { return total_volume_; }
  bool integer_lambda() const { return integer_lambda_; }

  bool counting_measure() const {
    return std::all_of(lambda_.begin(), lambda_.end(), [](double l) { return l == 1.0; });
  }

  std::size_t index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw std::out_of_range("unknown hypothesis '" + label + "'");
    return it->second;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<double> lambda_;
  std::vector<double> pi_;
  std::unordered_map<std::string, std::size_t> index_;
  double total_volume_ = 0.0;
  bool integer_lambda_ = true;
};

class PValueVector {
 public:
  PValueVector() = default;
  explicit PValueVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
        throw std::invalid_argument("PValueVector: entry " + std::to_string(i) +
                                    " = " + format_double(values_[i]) + " outside [0,1]");
      }
    }
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  // Copy with one coordinate replaced.
  PValueVector with(std::size_t i, double value) const {
    auto v = values_;
    v.at(i) = value;
    return PValueVector(std::move(v));
  }

 private:
  std::vector<double> values_;
};

inline void check_sizes(const PValueVector& p, const HypothesisSpace& space) {
  if (p.size() != space.size()) {
    throw std::invalid_argument("p-value vector has " + std::to_string(p.size()) +
                                " entries but the hypothesis space has " +
                                std::to_string(space.size()));
  }
}

// Subset of hypotheses, held as sorted indices into a HypothesisSpace.
class RejectionSet {
 public:
  RejectionSet() = default;

  RejectionSet(std::vector<std::size_t> members, const HypothesisSpace& space)
      : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    for (std::size_t i : members_) {
      if (i >= space.size()) throw std::out_of_range("RejectionSet: index out of range");
      volume_ += space.lambda(i);
    }
  }

  static RejectionSet all(const HypothesisSpace& space) {
    std::vector<std::size_t> idx(space.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return RejectionSet(std::move(idx), space);
  }

  const std::vector<std::size_t>& members() const { return members_; }
  std::size_t count() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  double volume() const { return volume_; }

  bool contains(std::size_t i) const {
    return std::binary_search(members_.begin(), members_.end(), i);
  }

  bool is_subset_of(const RejectionSet& other) const {
    return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                         members_.end());
  }

  std::vector<bool> mask(std::size_t m) const {
    std::vector<bool> out(m, false);
    for (std::size_t i : members_) out.at(i) = true;
    return out;
  }

  friend bool operator==(const RejectionSet& a, const RejectionSet& b) {
    return a.members_ == b.members_;
  }

 private:
  std::vector<std::size_t> members_;
  double volume_ = 0.0;
};

// q_h = p_h / pi(h), with q = +inf for pi = 0 < p and q = 0 for p = 0.
inline double normalized_pvalue(double p, double pi) {
  if (pi == 0.0) return p > 0.0 ? kInf : 0.0;
  return p / pi;
}

inline std::vector<double> normalized_pvalues(const PValueVector& p, const HypothesisSpace& space) {
  check_sizes(p, space);
  std::vector<double> q(p.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = normalized_pvalue(p[i], space.pi(i));
  return q;
}

// Weighted p-values p'_h = p_h / (m pi(h)). Meaningful under counting measure;
// equal to p wherever pi = 1/m.
inline std::vector<double> weighted_pvalues(const PValueVector& p, const HypothesisSpace& space) {
  check_sizes(p, space);
  const double m = static_cast<double>(space.size());
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double pi = space.pi(i);
    if (pi == 0.0) {
      out[i] = p[i] > 0.0 ? kInf : 0.0;
    } else if (pi * m == 1.0) {
      out[i] = p[i];
    } else {
      out[i] = p[i] / (m * pi);
    }
  }
  return out;
}

inline double volume(std::span<const std::size_t> set, const HypothesisSpace& space) {
  double v = 0.0;
  for (std::size_t i : set) {
    if (i >= space.size()) throw std::out_of_range("volume: index out of range");
    v += space.lambda(i);
  }
  return v;
}

// Pi(S) = sum over S of Lambda({h}) pi(h).
inline double pi_volume(std::span<const std::size_t> set, const HypothesisSpace& space) {
  double v = 0.0;
  for (std::size_t i : set) {
    if (i >= space.size()) throw std::out_of_range("pi_volume: index out of range");
    v += space.lambda(i) * space.pi(i);
  }
  return v;
}

inline double pi_volume(const std::vector<std::string>& labels, const HypothesisSpace& space) {
  std::vector<std::size_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) idx.push_back(space.index_of(l));
  return pi_volume(std::span<const std::size_t>(idx), space);
}

inline double pi_volume_total(const HypothesisSpace& space) {
  double v = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) v += space.lambda(i) * space.pi(i);
  return v;
}

// Pi of the hypotheses flagged in the mask.
inline double pi_volume(const std::vector<bool>& mask, const HypothesisSpace& space) {
  if (mask.size() != space.size()) throw std::invalid_argument("pi_volume: mask length mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) v += space.lambda(i) * space.pi(i);
  return v;
}

// False discovery proportion |R n H0| / |R|, zero when nothing is rejected.
inline double fdp(const RejectionSet& rejected, const std::vector<bool>& is_null,
                  const HypothesisSpace& space) {
  if (is_null.size() != space.size()) throw std::invalid_argument("fdp: null mask length mismatch");
  if (rejected.empty()) return 0.0;
  double false_volume = 0.0;
  for (std::size_t i : rejected.members()) {
    if (i >= space.size()) throw std::out_of_range("fdp: index out of range");
    if (is_null[i]) false_volume += space.lambda(i);
  }
  return std::clamp(false_volume / rejected.volume(), 0.0, 1.0);
}

inline double fdp(const RejectionSet& rejected, const std::vector<std::string>& true_nulls,
                  const HypothesisSpace& space) {
  std::vector<bool> mask(space.size(), false);
  for (const auto& l : true_nulls) mask[space.index_of(l)] = true;
  return fdp(rejected, mask, space);
}

}  // namespace stepfdr
