#pragma once

#include <span>
#include <vector>

namespace ruleprompt {

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> values, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
// Returns 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);
void normalize_in_place(std::vector<double>& v);

}  // namespace ruleprompt
