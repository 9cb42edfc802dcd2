#pragma once
// Truncated Taylor polynomials in three variables (x, y, z).
//
// Coefficient k holds d^{a+b+c} f / (dx^a dy^b dz^c) / (a! b! c!) at the
// expansion point, for the multi-index exps[k] = (a, b, c) with a+b+c <= N.
// Elementary functions compose their univariate Taylor series with the
// nilpotent part, so every partial up to order N is exact up to rounding.

#include <array>
#include <cmath>
#include <cstddef>

namespace hklab {

namespace jet_detail {

constexpr int count(int n) { return (n + 1) * (n + 2) * (n + 3) / 6; }

template <int N>
struct Tables {
  static constexpr int K = count(N);
  std::array<std::array<int, 3>, K> exps{};
  std::array<int, K> degree{};
  std::array<std::array<std::array<int, N + 1>, N + 1>, N + 1> index{};
  int npairs = 0;
  std::array<std::array<int, 3>, K * K> pairs{};

  constexpr Tables() {
    int k = 0;
    for (int d = 0; d <= N; ++d)
      for (int a = d; a >= 0; --a)
        for (int b = d - a; b >= 0; --b) {
          int c = d - a - b;
          exps[k] = {a, b, c};
          degree[k] = d;
          index[a][b][c] = k;
          ++k;
        }
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        if (degree[i] + degree[j] > N) continue;
        int a = exps[i][0] + exps[j][0];
        int b = exps[i][1] + exps[j][1];
        int c = exps[i][2] + exps[j][2];
        pairs[npairs++] = {i, j, index[a][b][c]};
      }
  }
};

template <int N>
inline constexpr Tables<N> tables{};

constexpr double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace jet_detail

template <int N>
class Jet {
 public:
  static constexpr int order = N;
  static constexpr int K = jet_detail::count(N);
  static constexpr const jet_detail::Tables<N>& tab() { return jet_detail::tables<N>; }

  std::array<double, K> c{};

  Jet() = default;
  Jet(double v) { c[0] = v; }  // NOLINT: constants promote implicitly

  static Jet variable(double v, int axis) {
    Jet j(v);
    if constexpr (N >= 1) j.c[index(axis == 0, axis == 1, axis == 2)] = 1.0;
    return j;
  }

  static constexpr int index(int a, int b, int cz) { return tab().index[a][b][cz]; }

  double value() const { return c[0]; }
  double& coef(int a, int b, int cz) { return c[index(a, b, cz)]; }
  double coef(int a, int b, int cz) const { return c[index(a, b, cz)]; }

  // Mixed partial derivative d^{a+b+c}/dx^a dy^b dz^c.
  double d(int a, int b, int cz) const {
    if (a + b + cz > N) return 0.0;
    return c[index(a, b, cz)] * jet_detail::factorial(a) * jet_detail::factorial(b) *
           jet_detail::factorial(cz);
  }

  double laplacian() const { return d(2, 0, 0) + d(0, 2, 0) + d(0, 0, 2); }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < K; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < K; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    c[0] += s;
    return *this;
  }
  Jet operator-() const {
    Jet r;
    for (int k = 0; k < K; ++k) r.c[k] = -c[k];
    return r;
  }

  friend Jet operator*(const Jet& x, const Jet& y) {
    Jet r;
    const auto& t = tab();
    for (int p = 0; p < t.npairs; ++p) {
      const auto& q = t.pairs[p];
      r.c[q[2]] += x.c[q[0]] * y.c[q[1]];
    }
    return r;
  }

  // f(x0 + h) with series coefficients s[n] = f^{(n)}(x0)/n!.
  Jet compose(const std::array<double, N + 1>& s) const {
    Jet h = *this;
    h.c[0] = 0.0;
    Jet r(s[N]);
    for (int n = N - 1; n >= 0; --n) {
      r = r * h;
      r.c[0] += s[n];
    }
    return r;
  }
};

template <int N> Jet<N> operator+(Jet<N> a, const Jet<N>& b) { return a += b; }
template <int N> Jet<N> operator-(Jet<N> a, const Jet<N>& b) { return a -= b; }
template <int N> Jet<N> operator+(Jet<N> a, double s) { return a += s; }
template <int N> Jet<N> operator+(double s, Jet<N> a) { return a += s; }
template <int N> Jet<N> operator-(Jet<N> a, double s) { return a += -s; }
template <int N> Jet<N> operator-(double s, const Jet<N>& a) { return (-a) += s; }
template <int N> Jet<N> operator*(Jet<N> a, double s) { return a *= s; }
template <int N> Jet<N> operator*(double s, Jet<N> a) { return a *= s; }

template <int N>
Jet<N> pow(const Jet<N>& x, double p) {
  std::array<double, N + 1> s{};
  double x0 = x.value();
  double binom = 1.0;
  for (int n = 0; n <= N; ++n) {
    s[n] = binom * std::pow(x0, p - n);
    binom *= (p - n) / (n + 1);
  }
  return x.compose(s);
}

template <int N> Jet<N> recip(const Jet<N>& x) { return pow(x, -1.0); }
template <int N> Jet<N> sqrt(const Jet<N>& x) { return pow(x, 0.5); }
template <int N> Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) { return a * recip(b); }
template <int N> Jet<N> operator/(const Jet<N>& a, double s) { return a * (1.0 / s); }
template <int N> Jet<N> operator/(double s, const Jet<N>& b) { return s * recip(b); }

template <int N>
Jet<N> exp(const Jet<N>& x) {
  std::array<double, N + 1> s{};
  double e = std::exp(x.value());
  for (int n = 0; n <= N; ++n) s[n] = e / jet_detail::factorial(n);
  return x.compose(s);
}

template <int N>
Jet<N> log(const Jet<N>& x) {
  std::array<double, N + 1> s{};
  double x0 = x.value();
  s[0] = std::log(x0);
  for (int n = 1; n <= N; ++n) s[n] = ((n % 2) ? 1.0 : -1.0) / (n * std::pow(x0, n));
  return x.compose(s);
}

template <int N>
Jet<N> sin(const Jet<N>& x) {
  std::array<double, N + 1> s{};
  double sv = std::sin(x.value()), cv = std::cos(x.value());
  const double cyc[4] = {sv, cv, -sv, -cv};
  for (int n = 0; n <= N; ++n) s[n] = cyc[n % 4] / jet_detail::factorial(n);
  return x.compose(s);
}

template <int N>
Jet<N> cos(const Jet<N>& x) {
  std::array<double, N + 1> s{};
  double sv = std::sin(x.value()), cv = std::cos(x.value());
  const double cyc[4] = {cv, -sv, -cv, sv};
  for (int n = 0; n <= N; ++n) s[n] = cyc[n % 4] / jet_detail::factorial(n);
  return x.compose(s);
}

namespace jet_detail {
// Derivatives of erfc: erfc^{(n)}(x) = -(2/sqrt(pi)) (-1)^{n-1} H_{n-1}(x) e^{-x^2},
// with physicists' Hermite polynomials H.
template <int N>
std::array<double, N + 1> erfc_series(double x0) {
  std::array<double, N + 1> s{};
  s[0] = std::erfc(x0);
  double g = 2.0 / std::sqrt(M_PI) * std::exp(-x0 * x0);
  double hm = 0.0, h = 1.0;  // H_{-1} unused, H_0 = 1
  for (int n = 1; n <= N; ++n) {
    int k = n - 1;
    double sign = (k % 2) ? 1.0 : -1.0;
    s[n] = sign * h * g / factorial(n);
    double hn = 2.0 * x0 * h - 2.0 * k * hm;
    hm = h;
    h = hn;
  }
  return s;
}
}  // namespace jet_detail

template <int N>
Jet<N> erfc(const Jet<N>& x) {
  return x.compose(jet_detail::erfc_series<N>(x.value()));
}

template <int N>
Jet<N> erf(const Jet<N>& x) {
  auto s = jet_detail::erfc_series<N>(x.value());
  for (auto& v : s) v = -v;
  s[0] = std::erf(x.value());
  return x.compose(s);
}

// Scalar overloads so templated kernels can run on plain doubles.
inline double recip(double x) { return 1.0 / x; }

}  // namespace hklab
