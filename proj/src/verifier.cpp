#include "choreo/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "choreo/errors.hpp"

namespace choreo {

namespace {

// Dormand & Prince 8(5,3): nodes, stages, weights, error and dense-output
// coefficients.
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double c14 = 0.1e+00;
constexpr double c15 = 0.2e+00;
constexpr double c16 = 0.777777777777777777777777777778e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double a141 = 5.61675022830479523392909219681e-2;
constexpr double a147 = 2.53500210216624811088794765333e-1;
constexpr double a148 = -2.46239037470802489917441475441e-1;
constexpr double a149 = -1.24191423263816360469010140626e-1;
constexpr double a1410 = 1.5329179827876569731206322685e-1;
constexpr double a1411 = 8.20105229563468988491666602057e-3;
constexpr double a1412 = 7.56789766054569976138603589584e-3;
constexpr double a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2;
constexpr double a156 = 2.83009096723667755288322961402e-2;
constexpr double a157 = 5.35419883074385676223797384372e-2;
constexpr double a158 = -5.49237485713909884646569340306e-2;
constexpr double a1511 = -1.08347328697249322858509316994e-4;
constexpr double a1512 = 3.82571090835658412954920192323e-4;
constexpr double a1513 = -3.40465008687404560802977114492e-4;
constexpr double a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1;
constexpr double a166 = -4.69762141536116384314449447206e0;
constexpr double a167 = 7.68342119606259904184240953878e0;
constexpr double a168 = 4.06898981839711007970213554331e0;
constexpr double a169 = 3.56727187455281109270669543021e-1;
constexpr double a1613 = -1.39902416515901462129418009734e-3;
constexpr double a1614 = 2.9475147891527723389556272149e0;
constexpr double a1615 = -9.15095847217987001081870187138e0;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

constexpr double d41 = -0.84289382761090128651353491142e+01;
constexpr double d46 = 0.56671495351937776962531783590e+00;
constexpr double d47 = -0.30689499459498916912797304727e+01;
constexpr double d48 = 0.23846676565120698287728149680e+01;
constexpr double d49 = 0.21170345824450282767155149946e+01;
constexpr double d410 = -0.87139158377797299206789907490e+00;
constexpr double d411 = 0.22404374302607882758541771650e+01;
constexpr double d412 = 0.63157877876946881815570249290e+00;
constexpr double d413 = -0.88990336451333310820698117400e-01;
constexpr double d414 = 0.18148505520854727256656404962e+02;
constexpr double d415 = -0.91946323924783554000451984436e+01;
constexpr double d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02;
constexpr double d56 = 0.24228349177525818288430175319e+03;
constexpr double d57 = 0.16520045171727028198505394887e+03;
constexpr double d58 = -0.37454675472269020279518312152e+03;
constexpr double d59 = -0.22113666853125306036270938578e+02;
constexpr double d510 = 0.77334326684722638389603898808e+01;
constexpr double d511 = -0.30674084731089398182061213626e+02;
constexpr double d512 = -0.93321305264302278729567221706e+01;
constexpr double d513 = 0.15697238121770843886131091075e+02;
constexpr double d514 = -0.31139403219565177677282850411e+02;
constexpr double d515 = -0.93529243588444783865713862664e+01;
constexpr double d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02;
constexpr double d66 = -0.38703730874935176555105901742e+03;
constexpr double d67 = -0.18917813819516756882830838328e+03;
constexpr double d68 = 0.52780815920542364900561016686e+03;
constexpr double d69 = -0.11573902539959630126141871134e+02;
constexpr double d610 = 0.68812326946963000169666922661e+01;
constexpr double d611 = -0.10006050966910838403183860980e+01;
constexpr double d612 = 0.77771377980534432092869265740e+00;
constexpr double d613 = -0.27782057523535084065932004339e+01;
constexpr double d614 = -0.60196695231264120758267380846e+02;
constexpr double d615 = 0.84320405506677161018159903784e+02;
constexpr double d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02;
constexpr double d76 = -0.15418974869023643374053993627e+03;
constexpr double d77 = -0.23152937917604549567536039109e+03;
constexpr double d78 = 0.35763911791061412378285349910e+03;
constexpr double d79 = 0.93405324183624310003907691704e+02;
constexpr double d710 = -0.37458323136451633156875139351e+02;
constexpr double d711 = 0.10409964950896230045147246184e+03;
constexpr double d712 = 0.29840293426660503123344363579e+02;
constexpr double d713 = -0.43533456590011143754432175058e+02;
constexpr double d714 = 0.96324553959188282948394950600e+02;
constexpr double d715 = -0.39177261675615439165231486172e+02;
constexpr double d716 = -0.14972683625798562581422125276e+03;

}  // namespace

double Dop853::initial_step(double t, const Vec& y, const Vec& f0, double hmax) {
  const Vec sk = atol_ + rtol_ * y.array().abs();
  const double dnf = (f0.array() / sk.array()).square().sum();
  const double dny = (y.array() / sk.array()).square().sum();
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  Vec f1(y.size());
  rhs_(t + h, y + h * f0, f1);
  const double der2 = std::sqrt(((f1 - f0).array() / sk.array()).square().sum()) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
  return std::min({100.0 * h, h1, hmax});
}

Vec Dop853::run(double t0, const Vec& y0, double t1, const std::vector<double>& outputs,
                const std::function<void(double, const Vec&)>& sink) {
  if (!(t1 >= t0)) throw InvalidInput("Dop853: integration must run forward in time");
  const int n = static_cast<int>(y0.size());
  const double hmax = t1 - t0;
  Vec y = y0;
  double t = t0;
  size_t next_out = 0;
  while (next_out < outputs.size() && outputs[next_out] <= t0) sink(outputs[next_out++], y0);
  if (hmax == 0.0) return y;

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n), k11(n), k12(n);
  Vec k14(n), k15(n), k16(n), yw(n), ynew(n), fnew(n);
  Vec r1(n), r2(n), r3(n), r4(n), r5(n), r6(n), r7(n), r8(n);
  rhs_(t, y, k1);
  double h = initial_step(t, y, k1, hmax);
  bool last_rejected = false;
  constexpr double safe = 0.9, facc1 = 1.0 / 0.333, facc2 = 1.0 / 6.0;

  for (long nstep = 0;; ++nstep) {
    if (nstep > max_steps) throw StepUnderflow("Dop853: too many steps");
    if (t + 1.01 * h >= t1) h = t1 - t;
    if (h < 1e-14 * std::max(1.0, std::abs(t))) throw StepUnderflow("Dop853: step size underflow");

    yw = y + h * a21 * k1;
    rhs_(t + c2 * h, yw, k2);
    yw = y + h * (a31 * k1 + a32 * k2);
    rhs_(t + c3 * h, yw, k3);
    yw = y + h * (a41 * k1 + a43 * k3);
    rhs_(t + c4 * h, yw, k4);
    yw = y + h * (a51 * k1 + a53 * k3 + a54 * k4);
    rhs_(t + c5 * h, yw, k5);
    yw = y + h * (a61 * k1 + a64 * k4 + a65 * k5);
    rhs_(t + c6 * h, yw, k6);
    yw = y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs_(t + c7 * h, yw, k7);
    yw = y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
    rhs_(t + c8 * h, yw, k8);
    yw = y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
    rhs_(t + c9 * h, yw, k9);
    yw = y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 + a109 * k9);
    rhs_(t + c10 * h, yw, k10);
    yw = y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 + a119 * k9 + a1110 * k10);
    rhs_(t + c11 * h, yw, k11);
    yw = y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 + a129 * k9 +
                  a1210 * k10 + a1211 * k11);
    rhs_(t + h, yw, k12);
    const Vec incr = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
    ynew = y + h * incr;

    const Vec sk = atol_ + rtol_ * y.array().abs().max(ynew.array().abs());
    const Vec e3 = incr - e31 * k1 - e32 * k9 - e33 * k12;
    const Vec e5 = e51 * k1 + e56 * k6 + e57 * k7 + e58 * k8 + e59 * k9 + e510 * k10 + e511 * k11 + e512 * k12;
    const double err3 = (e3.array() / sk.array()).square().sum();
    const double err5 = (e5.array() / sk.array()).square().sum();
    double deno = err5 + 0.01 * err3;
    if (deno <= 0.0) deno = 1.0;
    const double err = std::abs(h) * err5 * std::sqrt(1.0 / (n * deno));
    if (!std::isfinite(err)) throw StepUnderflow("Dop853: non-finite error estimate");
    const double fac11 = std::pow(err, 0.125);
    const double fac = std::max(facc2, std::min(facc1, fac11 / safe));

    if (err > 1.0) {
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
      ++rejected_;
      continue;
    }
    ++accepted_;
    rhs_(t + h, ynew, fnew);
    const bool want_dense = next_out < outputs.size() && outputs[next_out] <= t + h;
    if (want_dense) {
      const Vec ydiff = ynew - y;
      const Vec bspl = h * k1 - ydiff;
      r1 = y;
      r2 = ydiff;
      r3 = bspl;
      r4 = ydiff - h * fnew - bspl;
      r5 = d41 * k1 + d46 * k6 + d47 * k7 + d48 * k8 + d49 * k9 + d410 * k10 + d411 * k11 + d412 * k12;
      r6 = d51 * k1 + d56 * k6 + d57 * k7 + d58 * k8 + d59 * k9 + d510 * k10 + d511 * k11 + d512 * k12;
      r7 = d61 * k1 + d66 * k6 + d67 * k7 + d68 * k8 + d69 * k9 + d610 * k10 + d611 * k11 + d612 * k12;
      r8 = d71 * k1 + d76 * k6 + d77 * k7 + d78 * k8 + d79 * k9 + d710 * k10 + d711 * k11 + d712 * k12;
      yw = y + h * (a141 * k1 + a147 * k7 + a148 * k8 + a149 * k9 + a1410 * k10 + a1411 * k11 + a1412 * k12 +
                    a1413 * fnew);
      rhs_(t + c14 * h, yw, k14);
      yw = y + h * (a151 * k1 + a156 * k6 + a157 * k7 + a158 * k8 + a1511 * k11 + a1512 * k12 + a1513 * fnew +
                    a1514 * k14);
      rhs_(t + c15 * h, yw, k15);
      yw = y + h * (a161 * k1 + a166 * k6 + a167 * k7 + a168 * k8 + a169 * k9 + a1613 * fnew + a1614 * k14 +
                    a1615 * k15);
      rhs_(t + c16 * h, yw, k16);
      r5 = h * (r5 + d413 * fnew + d414 * k14 + d415 * k15 + d416 * k16);
      r6 = h * (r6 + d513 * fnew + d514 * k14 + d515 * k15 + d516 * k16);
      r7 = h * (r7 + d613 * fnew + d614 * k14 + d615 * k15 + d616 * k16);
      r8 = h * (r8 + d713 * fnew + d714 * k14 + d715 * k15 + d716 * k16);
      while (next_out < outputs.size() && outputs[next_out] <= t + h) {
        const double s = (outputs[next_out] - t) / h;
        const double s1 = 1.0 - s;
        const Vec conpar = r5 + s * (r6 + s1 * (r7 + s * r8));
        sink(outputs[next_out], r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * conpar))));
        ++next_out;
      }
    }
    y = ynew;
    k1 = fnew;
    t += h;
    if (t >= t1) return y;
    double hnew = h / fac;
    if (last_rejected) hnew = std::min(hnew, h);
    last_rejected = false;
    h = std::min(hnew, hmax);
  }
}

Trajectory integrate(const Vec& state, const SystemConfig& config, double duration, double tol,
                     std::vector<double> output_times) {
  if (!(duration >= 0.0)) throw InvalidInput("integrate: duration must be nonnegative");
  check_collisions(state, config);
  if (output_times.empty()) output_times = {0.0, duration};
  std::sort(output_times.begin(), output_times.end());
  Dop853 solver([&config](double, const Vec& y, Vec& dy) { dy = vector_field(y, config); }, tol, tol);
  Trajectory traj;
  solver.run(0.0, state, duration, output_times, [&traj](double t, const Vec& y) {
    traj.times.push_back(t);
    traj.states.push_back(y);
  });
  traj.accepted_steps = solver.accepted();
  traj.rejected_steps = solver.rejected();
  return traj;
}

OracleReport cross_validate(const OrbitSolution& orbit, double tol, int samples) {
  const double period = orbit.period;
  std::vector<double> times(samples + 1);
  for (int s = 0; s <= samples; ++s) times[s] = period * s / samples;
  times.back() = period;
  const Vec x0 = orbit.nodes.col(0);
  const Trajectory traj = integrate(x0, orbit.config, period, tol, times);

  OracleReport rep;
  const auto q0 = conserved_quantities(x0, orbit.config);
  const double e0 = jacobi_energy(x0, orbit.config);
  for (size_t s = 0; s < traj.states.size(); ++s) {
    const Vec& x = traj.states[s];
    const double tau = static_cast<double>(s) / samples;
    rep.max_deviation = std::max(rep.max_deviation, (x - evaluate_orbit(orbit, tau)).lpNorm<Eigen::Infinity>());
    const auto q = conserved_quantities(x, orbit.config);
    rep.pz_drift = std::max(rep.pz_drift, std::abs(q.pz - q0.pz) / std::max(1.0, std::abs(q0.pz)));
    rep.angular_drift =
        std::max(rep.angular_drift, std::abs(q.angular - q0.angular) / std::max(1.0, std::abs(q0.angular)));
    rep.energy_drift =
        std::max(rep.energy_drift, std::abs(jacobi_energy(x, orbit.config) - e0) / std::max(1.0, std::abs(e0)));
  }
  rep.return_residual = (traj.states.back() - x0).lpNorm<Eigen::Infinity>();
  return rep;
}

SymmetryReport symmetry_residuals(const OrbitSolution& orbit, int samples) {
  const SystemConfig& c = orbit.config;
  const int n = c.n;
  const int k = orbit.wave_number;
  // grid on which every shift jk/n and 1/2 is a whole number of samples
  const int unit = 2 * n;
  const int total = unit * std::max(1, (samples + unit - 1) / unit);
  std::vector<Vec> x(total);
  for (int s = 0; s < total; ++s) x[s] = evaluate_orbit(orbit, static_cast<double>(s) / total);
  auto at = [&](long s) -> const Vec& { return x[((s % total) + total) % total]; };
  auto pos = [&](const Vec& v, int j) -> Eigen::Vector3d { return v.segment<3>(3 * c.ring_index(j)); };

  SymmetryReport r;
  const int bn = n;
  for (int s = 0; s < total; ++s)
    for (int j = 1; j <= n; ++j) r.max_abs_z = std::max(r.max_abs_z, std::abs(pos(at(s), j).z()));
  r.spatial_applies = r.max_abs_z > 1e-8;
  r.half_period_applies = (n % 2 == 0) && (2 * k == n);

  for (int s = 0; s < total; ++s) {
    const Eigen::Vector3d un = pos(at(s), bn);
    for (int j = 1; j <= n; ++j) {
      const long shift = static_cast<long>(j) * k * (total / n);
      const Eigen::Vector3d uj = pos(at(s), j);
      const Eigen::Vector3d us = pos(at(s + shift), bn);
      const double a = j * c.zeta;
      const Eigen::Vector2d rot(std::cos(a) * us.x() - std::sin(a) * us.y(), std::sin(a) * us.x() + std::cos(a) * us.y());
      r.traveling_wave = std::max(r.traveling_wave, (uj.head<2>() - rot).norm());
      r.spatial = std::max(r.spatial, std::abs(uj.z() - us.z()));
      if (r.half_period_applies)
        r.alternation = std::max(r.alternation, std::abs(uj.z() - ((j % 2) ? -1.0 : 1.0) * un.z()));
    }
    const Eigen::Vector3d um = pos(at(-s), bn);
    r.reversibility = std::max(r.reversibility, Eigen::Vector2d(un.x() - um.x(), un.y() + um.y()).norm());
    const Eigen::Vector3d uh = pos(at(s + total / 2), bn);
    r.half_period = std::max({r.half_period, (un.head<2>() - uh.head<2>()).norm(), std::abs(un.z() + uh.z())});
  }
  double axial[2] = {0.0, 0.0};
  for (int ci = 0; ci < 2; ++ci) {
    const long cs = ci * (total / 2);
    for (int s = 0; s < total; ++s) {
      const Eigen::Vector3d a = pos(at(s), bn);
      const Eigen::Vector3d b = pos(at(cs - s), bn);
      axial[ci] = std::max(axial[ci], (Eigen::Vector3d(a.x(), -a.y(), -a.z()) - b).norm());
    }
  }
  r.axial = std::min(axial[0], axial[1]);
  return r;
}

UnfoldingReport unfolding_check(const OrbitSolution& orbit, double tol) {
  UnfoldingReport r;
  r.magnitudes = orbit.lambdas.cwiseAbs();
  r.passed = r.magnitudes.maxCoeff() <= tol;
  const int dim = orbit.config.dim();
  const Vec w = inner_product_weights(orbit.mesh, dim);
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  for (int g = 0; g < orbit.mesh.node_count(); ++g) {
    const auto f = unfolding_fields(orbit.nodes.col(g), orbit.config);
    const double wg = w[g * dim];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) gram(a, b) += wg * f[a].dot(f[b]);
  }
  const double diag = gram(0, 0) * gram(1, 1) * gram(2, 2);
  r.gram_determinant = diag > 0.0 ? gram.determinant() / diag : 0.0;
  return r;
}

}  // namespace choreo
