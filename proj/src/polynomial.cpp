#include "lbstab/polynomial.hpp"

#include <utility>

namespace lbstab {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return Polynomial{};
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

std::size_t Polynomial::degree() const {
  for (std::size_t k = coeffs_.size(); k-- > 0;)
    if (coeffs_[k] != 0.0) return k;
  return 0;
}

}  // namespace lbstab
