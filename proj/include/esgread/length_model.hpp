#pragma once

// Ordinary least squares on a single predictor: words per sentence.

#include <span>
#include <string>

#include "esgread/error.hpp"

namespace esgread::length_model {

struct LinearModel {
  double weight = 0;
  double bias = 0;

  double predict(double x) const { return weight * x + bias; }
  bool operator==(const LinearModel&) const = default;
};

struct FitResult {
  LinearModel model;
  bool degenerate = false;  // all x equal; model is the constant mean(y)
};

inline FitResult fit_length_baseline(std::span<const double> x,
                                     std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("fit_length_baseline: " + std::to_string(x.size()) +
                    " inputs vs " + std::to_string(y.size()) + " targets");
  }
  if (x.size() < 2) {
    throw DataError("fit_length_baseline: need at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  FitResult r;
  if (sxx == 0) {
    r.degenerate = true;
    r.model = {0.0, my};
    return r;
  }
  r.model.weight = sxy / sxx;
  r.model.bias = my - r.model.weight * mx;
  return r;
}

}  // namespace esgread::length_model
