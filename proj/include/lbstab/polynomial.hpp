#pragma once

#include <cstddef>
#include <vector>

namespace lbstab {

// Dense real polynomial  p(x) = sum_k coeffs[k] * x^k.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);

  double operator()(double x) const;
  Polynomial derivative() const;

  // Degree of the trimmed polynomial; the zero polynomial reports 0.
  std::size_t degree() const;
  bool empty() const { return coeffs_.empty(); }
  const std::vector<double>& coeffs() const { return coeffs_; }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<double> coeffs_;
};

}  // namespace lbstab
