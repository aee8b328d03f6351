/**
 * @file integrator.hpp
 * @brief Dormand-Prince 8(5,3) embedded Runge-Kutta integrator, generic over
 *        the scalar type. Step-size control reads constant parts only, so the
 *        same code integrates real states and Taylor polynomial states.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "robod/da/taylor_poly.hpp"

namespace robod::dyn {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double min_step = 1e-3;  ///< seconds; smaller steps raise
  long max_steps = 1000000;
  int error_components = -1;  ///< leading components used in the error norm; -1 for all
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

class StepUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
void axpy_into(std::vector<T>& out, const std::vector<T>& y, double h,
               std::initializer_list<std::pair<double, const std::vector<T>*>> terms) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    T acc = (*terms.begin()->second)[i] * terms.begin()->first;
    for (auto it = terms.begin() + 1; it != terms.end(); ++it) acc += (*it->second)[i] * it->first;
    out[i] = y[i] + h * acc;
  }
}

}  // namespace detail

/// Integrates dy/dt = f(t, y) from t0 to t1. The optional post_step hook may
/// modify the state after every accepted step.
template <class T, class F>
std::vector<T> dop853(F&& f, std::vector<T> y, double t_start, double t_end, const IntegratorOptions& opt = {},
                      IntegratorStats* stats = nullptr,
                      const std::function<void(double, std::vector<T>&)>& post_step = nullptr) {
  if (t_end == t_start) return y;
  // Time runs from 0 internally; absolute epochs are large and would cost
  // digits in t + h.
  const double t0 = 0.0, t1 = t_end - t_start;
  constexpr double c2 = 0.526001519587677318785587544488E-01, c3 = 0.789002279381515978178381316732E-01,
                   c4 = 0.118350341907227396726757197510E+00, c5 = 0.281649658092772603273242802490E+00,
                   c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00,
                   c8 = 0.307692307692307692307692307692E+00, c9 = 0.651282051282051282051282051282E+00,
                   c10 = 0.6E+00, c11 = 0.857142857142857142857142857142E+00;
  constexpr double b1 = 5.42937341165687622380535766363E-2, b6 = 4.45031289275240888144113950566E0,
                   b7 = 1.89151789931450038304281599044E0, b8 = -5.8012039600105847814672114227E0,
                   b9 = 3.1116436695781989440891606237E-1, b10 = -1.52160949662516078556178806805E-1,
                   b11 = 2.01365400804030348374776537501E-1, b12 = 4.47106157277725905176885569043E-2;
  constexpr double a21 = 5.26001519587677318785587544488E-2, a31 = 1.97250569845378994544595329183E-2,
                   a32 = 5.91751709536136983633785987549E-2, a41 = 2.95875854768068491816892993775E-2,
                   a43 = 8.87627564304205475450678981324E-2, a51 = 2.41365134159266685502369798665E-1,
                   a53 = -8.84549479328286085344864962717E-1, a54 = 9.24834003261792003115737966543E-1,
                   a61 = 3.7037037037037037037037037037E-2, a64 = 1.70828608729473871279604482173E-1,
                   a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2,
                   a74 = 1.70252211019544039314978060272E-1, a75 = 6.02165389804559606850219397283E-2,
                   a76 = -1.7578125E-2, a81 = 3.70920001185047927108779319836E-2,
                   a84 = 1.70383925712239993810214054705E-1, a85 = 1.07262030446373284651809199168E-1,
                   a86 = -1.53194377486244017527936158236E-2, a87 = 8.27378916381402288758473766002E-3,
                   a91 = 6.24110958716075717114429577812E-1, a94 = -3.36089262944694129406857109825E0,
                   a95 = -8.68219346841726006818189891453E-1, a96 = 2.75920996994467083049415600797E1,
                   a97 = 2.01540675504778934086186788979E1, a98 = -4.34898841810699588477366255144E1,
                   a101 = 4.77662536438264365890433908527E-1, a104 = -2.48811461997166764192642586468E0,
                   a105 = -5.90290826836842996371446475743E-1, a106 = 2.12300514481811942347288949897E1,
                   a107 = 1.52792336328824235832596922938E1, a108 = -3.32882109689848629194453265587E1,
                   a109 = -2.03312017085086261358222928593E-2, a111 = -9.3714243008598732571704021658E-1,
                   a114 = 5.18637242884406370830023853209E0, a115 = 1.09143734899672957818500254654E0,
                   a116 = -8.14978701074692612513997267357E0, a117 = -1.85200656599969598641566180701E1,
                   a118 = 2.27394870993505042818970056734E1, a119 = 2.49360555267965238987089396762E0,
                   a1110 = -3.0467644718982195003823669022E0, a121 = 2.27331014751653820792359768449E0,
                   a124 = -1.05344954667372501984066689879E1, a125 = -2.00087205822486249909675718444E0,
                   a126 = -1.79589318631187989172765950534E1, a127 = 2.79488845294199600508499808837E1,
                   a128 = -2.85899827713502369474065508674E0, a129 = -8.87285693353062954433549289258E0,
                   a1210 = 1.23605671757943030647266201528E1, a1211 = 6.43392746015763530355970484046E-1;
  constexpr double bhh1 = 0.244094488188976377952755905512E+00, bhh2 = 0.733846688281611857341361741547E+00,
                   bhh3 = 0.220588235294117647058823529412E-01;
  constexpr double er1 = 0.1312004499419488073250102996E-01, er6 = -0.1225156446376204440720569753E+01,
                   er7 = -0.4957589496572501915214079952E+00, er8 = 0.1664377182454986536961530415E+01,
                   er9 = -0.3503288487499736816886487290E+00, er10 = 0.3341791187130174790297318841E+00,
                   er11 = 0.8192320648511571246570742613E-01, er12 = -0.2235530786388629525884427845E-01;
  constexpr double safe = 0.9, fac1 = 1.0 / 3.0, fac2 = 6.0, expo1 = 1.0 / 8.0;

  const std::size_t n = y.size();
  const std::size_t ne = opt.error_components < 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(opt.error_components));
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double hmax = std::abs(t1 - t0);
  IntegratorStats local;
  IntegratorStats& st = stats ? *stats : local;

  auto eval = [&](double t, const std::vector<T>& x) {
    ++st.evaluations;
    return f(t_start + t, x);
  };
  auto sk = [&](double a, double b) { return 1.0 / (opt.atol + opt.rtol * std::max(std::abs(a), std::abs(b))); };

  std::vector<T> k1 = eval(t0, y);
  if (k1.size() != n) throw std::invalid_argument("dop853: derivative size mismatch");

  // Initial step from first and (estimated) second derivative magnitudes.
  double h;
  {
    double dnf = 0, dny = 0;
    for (std::size_t i = 0; i < ne; ++i) {
      const double s = sk(cst(y[i]), 0.0);
      dnf += std::pow(cst(k1[i]) * s, 2);
      dny += std::pow(cst(y[i]) * s, 2);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax);
    std::vector<double> y1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = cst(y[i]) + dir * h * cst(k1[i]);
    std::vector<T> y1t(n);
    for (std::size_t i = 0; i < n; ++i) y1t[i] = constant_like(y[i], y1[i]);
    const auto k2 = eval(t0 + dir * h, y1t);
    double der2 = 0;
    for (std::size_t i = 0; i < ne; ++i) der2 += std::pow((cst(k2[i]) - cst(k1[i])) * sk(cst(y[i]), 0.0), 2);
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(der2, std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
    // The guess is only a starting point; keep it clear of the underflow limit.
    h = dir * std::min(std::max(std::min(100 * h, h1), 10.0 * opt.min_step), hmax);
  }

  std::vector<T> k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n), w(n);
  double t = t0;
  bool last = false, reject = false;
  while (true) {
    if (st.accepted + st.rejected > opt.max_steps) throw std::runtime_error("dop853: too many steps");
    if (std::abs(h) < opt.min_step && std::abs(t1 - t) > opt.min_step) throw StepUnderflow("dop853: step size underflow");
    if ((t + 1.01 * h - t1) * dir > 0.0) {
      h = t1 - t;
      last = true;
    }
    detail::axpy_into(w, y, h, {{a21, &k1}});
    k2 = eval(t + c2 * h, w);
    detail::axpy_into(w, y, h, {{a31, &k1}, {a32, &k2}});
    k3 = eval(t + c3 * h, w);
    detail::axpy_into(w, y, h, {{a41, &k1}, {a43, &k3}});
    k4 = eval(t + c4 * h, w);
    detail::axpy_into(w, y, h, {{a51, &k1}, {a53, &k3}, {a54, &k4}});
    k5 = eval(t + c5 * h, w);
    detail::axpy_into(w, y, h, {{a61, &k1}, {a64, &k4}, {a65, &k5}});
    k6 = eval(t + c6 * h, w);
    detail::axpy_into(w, y, h, {{a71, &k1}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    k7 = eval(t + c7 * h, w);
    detail::axpy_into(w, y, h, {{a81, &k1}, {a84, &k4}, {a85, &k5}, {a86, &k6}, {a87, &k7}});
    k8 = eval(t + c8 * h, w);
    detail::axpy_into(w, y, h, {{a91, &k1}, {a94, &k4}, {a95, &k5}, {a96, &k6}, {a97, &k7}, {a98, &k8}});
    k9 = eval(t + c9 * h, w);
    detail::axpy_into(w, y, h,
                      {{a101, &k1}, {a104, &k4}, {a105, &k5}, {a106, &k6}, {a107, &k7}, {a108, &k8}, {a109, &k9}});
    k10 = eval(t + c10 * h, w);
    detail::axpy_into(w, y, h,
                      {{a111, &k1}, {a114, &k4}, {a115, &k5}, {a116, &k6}, {a117, &k7}, {a118, &k8}, {a119, &k9},
                       {a1110, &k10}});
    k2 = eval(t + c11 * h, w);
    const double tph = t + h;
    detail::axpy_into(w, y, h,
                      {{a121, &k1}, {a124, &k4}, {a125, &k5}, {a126, &k6}, {a127, &k7}, {a128, &k8}, {a129, &k9},
                       {a1210, &k10}, {a1211, &k2}});
    k3 = eval(tph, w);
    for (std::size_t i = 0; i < n; ++i) {
      k4[i] = b1 * k1[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] + b9 * k9[i] + b10 * k10[i] + b11 * k2[i] + b12 * k3[i];
      k5[i] = y[i] + h * k4[i];
    }
    double err = 0, err2 = 0;
    for (std::size_t i = 0; i < ne; ++i) {
      const double s = sk(cst(y[i]), cst(k5[i]));
      const double e2 = (cst(k4[i]) - bhh1 * cst(k1[i]) - bhh2 * cst(k9[i]) - bhh3 * cst(k3[i])) * s;
      const double e1 = (er1 * cst(k1[i]) + er6 * cst(k6[i]) + er7 * cst(k7[i]) + er8 * cst(k8[i]) +
                         er9 * cst(k9[i]) + er10 * cst(k10[i]) + er11 * cst(k2[i]) + er12 * cst(k3[i])) * s;
      err2 += e2 * e2;
      err += e1 * e1;
    }
    const double deno = err + 0.01 * err2;
    err = std::abs(h) * err * std::sqrt(1.0 / (deno <= 0.0 ? static_cast<double>(ne) : deno * static_cast<double>(ne)));
    if (!std::isfinite(err)) throw std::runtime_error("dop853: non-finite error estimate");

    const double fac11 = std::pow(err, expo1);
    const double fac = std::max(1.0 / fac2, std::min(1.0 / fac1, fac11 / safe));
    double hnew = h / fac;
    if (err <= 1.0) {
      ++st.accepted;
      y.swap(k5);
      t = tph;
      if (post_step) post_step(t_start + t, y);
      if (last) return y;
      k1 = eval(t, y);
      if (std::abs(hnew) > hmax) hnew = dir * hmax;
      if (reject) hnew = dir * std::min(std::abs(hnew), std::abs(h));
      reject = false;
    } else {
      hnew = h / std::min(1.0 / fac1, fac11 / safe);
      reject = true;
      last = false;
      ++st.rejected;
    }
    h = hnew;
  }
}

}  // namespace robod::dyn
