#include "symporb/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

// Adaptive Dormand-Prince 8(5,3) after Hairer & Wanner's DOP853, with the
// 7th-order dense-output interpolant. The variational system is propagated
// alongside the state (42 components) when an STM is requested.

namespace symporb {

namespace {

// Node / weight / dense coefficients of DOP853.
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

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double bhh1 = 0.244094488188976377952755905512e+00;
constexpr double bhh2 = 0.733846688281611857341361741547e+00;
constexpr double bhh3 = 0.220588235294117647058823529412e-01;

constexpr double er1 = 0.1312004499419488073250102996e-01;
constexpr double er6 = -0.1225156446376204440720569753e+01;
constexpr double er7 = -0.4957589496572501915214079952e+00;
constexpr double er8 = 0.1664377182454986536961530415e+01;
constexpr double er9 = -0.3503288487499736816886487290e+00;
constexpr double er10 = 0.3341791187130174790297318841e+00;
constexpr double er11 = 0.8192320648511571246570742613e-01;
constexpr double er12 = -0.2235530786388629525884427845e-01;

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

constexpr int kMaxDim = 42;

struct System {
    const Model* model;
    int n;  // 6 or 42

    void operator()(const double* y, double* f) const {
        Eigen::Map<const Vec6> s(y);
        Vec6 sv = s;
        Vec6 fv = vector_field(*model, sv);
        std::memcpy(f, fv.data(), 6 * sizeof(double));
        if (n == 6) return;
        // variational block: Phi' = A(s) Phi, Phi stored row-major in y[6..41]
        Mat6 a = variational_matrix(*model, sv);
        const double* phi = y + 6;
        double* dphi = f + 6;
        for (int j = 0; j < 6; ++j) {
            dphi[0 * 6 + j] = phi[3 * 6 + j];
            dphi[1 * 6 + j] = phi[4 * 6 + j];
            dphi[2 * 6 + j] = phi[5 * 6 + j];
            dphi[3 * 6 + j] = a(3, 0) * phi[0 * 6 + j] + a(3, 1) * phi[1 * 6 + j] +
                              a(3, 2) * phi[2 * 6 + j] + 2.0 * phi[4 * 6 + j];
            dphi[4 * 6 + j] = a(4, 0) * phi[0 * 6 + j] + a(4, 1) * phi[1 * 6 + j] +
                              a(4, 2) * phi[2 * 6 + j] - 2.0 * phi[3 * 6 + j];
            dphi[5 * 6 + j] = a(5, 0) * phi[0 * 6 + j] + a(5, 1) * phi[1 * 6 + j] +
                              a(5, 2) * phi[2 * 6 + j];
        }
    }
};

class Dop853 {
  public:
    Dop853(const System& sys, const Tolerances& tol) : sys_(sys), tol_(tol), n_(sys.n) {}

    // y is updated in place to the state at tend. step_hook is called after
    // every accepted step with the span [t_prev, t]; dense(ti, out) is valid
    // for the most recent accepted step.
    void integrate(double* y, double t0, double tend,
                   const std::function<bool(double, double)>& step_hook) {
        const double posneg = tend > t0 ? 1.0 : -1.0;
        if (tend == t0) return;
        double hmax = tol_.max_step > 0 ? tol_.max_step : std::abs(tend - t0);
        t_ = t0;
        y_ = y;
        sys_(y_, k1_);
        double h = initial_step(hmax, posneg);
        double facold = 1e-4;
        const double expo1 = 1.0 / 8.0 - kBeta * 0.2;
        const double facc1 = 1.0 / kFac1, facc2 = 1.0 / kFac2;
        bool last = false, reject = false;
        long nstep = 0;

        while (true) {
            if (++nstep > tol_.max_steps)
                throw std::runtime_error("integrator exceeded max step count");
            if (0.1 * std::abs(h) <= std::abs(t_) * kUround) throw StepSizeUnderflow(t_);
            if ((t_ + 1.01 * h - tend) * posneg > 0.0) {
                h = tend - t_;
                last = true;
            }
            h_ = h;
            do_stages();
            const double err = std::abs(h) * error_norm();
            const double fac11 = std::pow(err, expo1);
            double fac = fac11 / std::pow(facold, kBeta);
            fac = std::max(facc2, std::min(facc1, fac / kSafe));
            double hnew = h / fac;
            if (err <= 1.0) {
                facold = std::max(err, 1e-4);
                sys_(y5_, k4_);
                dense_ready_ = false;
                told_ = t_;
                t_ += h_;
                std::memcpy(yprev_, y_, n_ * sizeof(double));
                std::memcpy(y_, y5_, n_ * sizeof(double));
                // k1 for the next step; keep the old one for dense output
                std::memcpy(k1prev_, k1_, n_ * sizeof(double));
                std::memcpy(k1_, k4_, n_ * sizeof(double));
                if (!step_hook(told_, t_)) return;
                if (last) return;
                if (std::abs(hnew) > hmax) hnew = posneg * hmax;
                if (reject) hnew = posneg * std::min(std::abs(hnew), std::abs(h));
                reject = false;
            } else {
                hnew = h / std::min(facc1, fac11 / kSafe);
                reject = true;
                last = false;
            }
            h = hnew;
        }
    }

    // Dense evaluation inside the last accepted step; computes the extra
    // stages lazily on first use.
    void dense(double ti, double* out) {
        if (!dense_ready_) prepare_dense();
        const double s = (ti - told_) / h_;
        const double s1 = 1.0 - s;
        for (int i = 0; i < n_; ++i)
            out[i] = rc1_[i] + s * (rc2_[i] + s1 * (rc3_[i] + s * (rc4_[i] +
                     s1 * (rc5_[i] + s * (rc6_[i] + s1 * (rc7_[i] + s * rc8_[i]))))));
    }

    double current_time() const { return t_; }

  private:
    static constexpr double kUround = 2.3e-16;
    static constexpr double kSafe = 0.9;
    static constexpr double kFac1 = 1.0 / 3.0;
    static constexpr double kFac2 = 6.0;
    static constexpr double kBeta = 0.0;

    void do_stages() {
        const int n = n_;
        const double h = h_;
        const double* y = y_;
        auto f = [&](double* out, const double* in) { sys_(in, out); };
        for (int i = 0; i < n; ++i) w_[i] = y[i] + h * a21 * k1_[i];
        f(k2_, w_);
        for (int i = 0; i < n; ++i) w_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        f(k3_, w_);
        for (int i = 0; i < n; ++i) w_[i] = y[i] + h * (a41 * k1_[i] + a43 * k3_[i]);
        f(k4_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a51 * k1_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f(k5_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a61 * k1_[i] + a64 * k4_[i] + a65 * k5_[i]);
        f(k6_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a71 * k1_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
        f(k7_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a81 * k1_[i] + a84 * k4_[i] + a85 * k5_[i] + a86 * k6_[i] +
                                a87 * k7_[i]);
        f(k8_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a91 * k1_[i] + a94 * k4_[i] + a95 * k5_[i] + a96 * k6_[i] +
                                a97 * k7_[i] + a98 * k8_[i]);
        f(k9_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a101 * k1_[i] + a104 * k4_[i] + a105 * k5_[i] +
                                a106 * k6_[i] + a107 * k7_[i] + a108 * k8_[i] +
                                a109 * k9_[i]);
        f(k10_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a111 * k1_[i] + a114 * k4_[i] + a115 * k5_[i] +
                                a116 * k6_[i] + a117 * k7_[i] + a118 * k8_[i] +
                                a119 * k9_[i] + a1110 * k10_[i]);
        f(k11_, w_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a121 * k1_[i] + a124 * k4_[i] + a125 * k5_[i] +
                                a126 * k6_[i] + a127 * k7_[i] + a128 * k8_[i] +
                                a129 * k9_[i] + a1210 * k10_[i] + a1211 * k11_[i]);
        f(k12_, w_);
        for (int i = 0; i < n; ++i) {
            ksum_[i] = b1 * k1_[i] + b6 * k6_[i] + b7 * k7_[i] + b8 * k8_[i] +
                       b9 * k9_[i] + b10 * k10_[i] + b11 * k11_[i] + b12 * k12_[i];
            y5_[i] = y[i] + h * ksum_[i];
        }
    }

    double error_norm() const {
        double err = 0.0, err2 = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double sk =
                1.0 / (tol_.abs + tol_.rel * std::max(std::abs(y_[i]), std::abs(y5_[i])));
            double sqr = (ksum_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k12_[i]) * sk;
            err2 += sqr * sqr;
            sqr = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] +
                   er9 * k9_[i] + er10 * k10_[i] + er11 * k11_[i] + er12 * k12_[i]) *
                  sk;
            err += sqr * sqr;
        }
        double deno = err + 0.01 * err2;
        if (deno <= 0.0) deno = n_;
        return err * std::sqrt(1.0 / (deno * n_));
    }

    void prepare_dense() {
        const int n = n_;
        const double h = h_;
        const double* y = yprev_;
        for (int i = 0; i < n; ++i) {
            rc1_[i] = y[i];
            const double ydiff = y_[i] - y[i];
            rc2_[i] = ydiff;
            const double bspl = h * k1prev_[i] - ydiff;
            rc3_[i] = bspl;
            rc4_[i] = ydiff - h * k1_[i] - bspl;
            rc5_[i] = d41 * k1prev_[i] + d46 * k6_[i] + d47 * k7_[i] + d48 * k8_[i] +
                      d49 * k9_[i] + d410 * k10_[i] + d411 * k11_[i] + d412 * k12_[i];
            rc6_[i] = d51 * k1prev_[i] + d56 * k6_[i] + d57 * k7_[i] + d58 * k8_[i] +
                      d59 * k9_[i] + d510 * k10_[i] + d511 * k11_[i] + d512 * k12_[i];
            rc7_[i] = d61 * k1prev_[i] + d66 * k6_[i] + d67 * k7_[i] + d68 * k8_[i] +
                      d69 * k9_[i] + d610 * k10_[i] + d611 * k11_[i] + d612 * k12_[i];
            rc8_[i] = d71 * k1prev_[i] + d76 * k6_[i] + d77 * k7_[i] + d78 * k8_[i] +
                      d79 * k9_[i] + d710 * k10_[i] + d711 * k11_[i] + d712 * k12_[i];
        }
        // stages 14-16 (k1_ currently holds f at the step end)
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a141 * k1prev_[i] + a147 * k7_[i] + a148 * k8_[i] +
                                a149 * k9_[i] + a1410 * k10_[i] + a1411 * k11_[i] +
                                a1412 * k12_[i] + a1413 * k1_[i]);
        sys_(w_, ke1_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a151 * k1prev_[i] + a156 * k6_[i] + a157 * k7_[i] +
                                a158 * k8_[i] + a1511 * k11_[i] + a1512 * k12_[i] +
                                a1513 * k1_[i] + a1514 * ke1_[i]);
        sys_(w_, ke2_);
        for (int i = 0; i < n; ++i)
            w_[i] = y[i] + h * (a161 * k1prev_[i] + a166 * k6_[i] + a167 * k7_[i] +
                                a168 * k8_[i] + a169 * k9_[i] + a1613 * k1_[i] +
                                a1614 * ke1_[i] + a1615 * ke2_[i]);
        sys_(w_, ke3_);
        for (int i = 0; i < n; ++i) {
            rc5_[i] = h * (rc5_[i] + d413 * k1_[i] + d414 * ke1_[i] + d415 * ke2_[i] +
                           d416 * ke3_[i]);
            rc6_[i] = h * (rc6_[i] + d513 * k1_[i] + d514 * ke1_[i] + d515 * ke2_[i] +
                           d516 * ke3_[i]);
            rc7_[i] = h * (rc7_[i] + d613 * k1_[i] + d614 * ke1_[i] + d615 * ke2_[i] +
                           d616 * ke3_[i]);
            rc8_[i] = h * (rc8_[i] + d713 * k1_[i] + d714 * ke1_[i] + d715 * ke2_[i] +
                           d716 * ke3_[i]);
        }
        dense_ready_ = true;
    }

    double initial_step(double hmax, double posneg) const {
        double dnf = 0.0, dny = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double sk = tol_.abs + tol_.rel * std::abs(y_[i]);
            double sqr = k1_[i] / sk;
            dnf += sqr * sqr;
            sqr = y_[i] / sk;
            dny += sqr * sqr;
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min(h, hmax) * posneg;
        double w[kMaxDim], k2[kMaxDim];
        for (int i = 0; i < n_; ++i) w[i] = y_[i] + h * k1_[i];
        sys_(w, k2);
        double der2 = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double sk = tol_.abs + tol_.rel * std::abs(y_[i]);
            const double sqr = (k2[i] - k1_[i]) / sk;
            der2 += sqr * sqr;
        }
        der2 = std::sqrt(der2) / std::abs(h);
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                         : std::pow(0.01 / der12, 1.0 / 8.0);
        return std::min(100.0 * std::abs(h), std::min(h1, hmax)) * posneg;
    }

    System sys_;
    Tolerances tol_;
    int n_;
    double* y_ = nullptr;
    double t_ = 0.0, told_ = 0.0, h_ = 0.0;
    bool dense_ready_ = false;
    double yprev_[kMaxDim], y5_[kMaxDim], w_[kMaxDim], ksum_[kMaxDim];
    double k1_[kMaxDim], k1prev_[kMaxDim], k2_[kMaxDim], k3_[kMaxDim], k4_[kMaxDim],
        k5_[kMaxDim], k6_[kMaxDim], k7_[kMaxDim], k8_[kMaxDim], k9_[kMaxDim],
        k10_[kMaxDim], k11_[kMaxDim], k12_[kMaxDim];
    double ke1_[kMaxDim], ke2_[kMaxDim], ke3_[kMaxDim];
    double rc1_[kMaxDim], rc2_[kMaxDim], rc3_[kMaxDim], rc4_[kMaxDim], rc5_[kMaxDim],
        rc6_[kMaxDim], rc7_[kMaxDim], rc8_[kMaxDim];
};

Vec6 head6(const double* y) {
    Vec6 s;
    std::memcpy(s.data(), y, 6 * sizeof(double));
    return s;
}

Mat6 stm_of(const double* y) {
    Mat6 phi;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) phi(i, j) = y[6 + 6 * i + j];
    return phi;
}

struct EventHit {
    double time;
    Vec6 state;
    int sense;  // +1 increasing, -1 decreasing
};

// Locates event roots inside one accepted step by scanning dense sub-samples
// for sign changes and bisecting each bracket down to time roundoff.
void scan_step_for_events(Dop853& stepper, const EventSpec& ev, double ta, double tb,
                          std::vector<EventHit>& hits) {
    constexpr int kSub = 12;
    double buf[kMaxDim];
    double tprev = ta;
    stepper.dense(ta, buf);
    double gprev = ev.value(head6(buf));
    for (int i = 1; i <= kSub; ++i) {
        const double ti = ta + (tb - ta) * i / kSub;
        stepper.dense(ti, buf);
        const double gi = ev.value(head6(buf));
        if (gprev * gi < 0.0) {
            double lo = tprev, hi = ti, glo = gprev;
            for (int it = 0; it < 128 && hi - lo > 0.0; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                stepper.dense(mid, buf);
                const double gm = ev.value(head6(buf));
                if (glo * gm <= 0.0)
                    hi = mid;
                else {
                    lo = mid;
                    glo = gm;
                }
            }
            const double troot = 0.5 * (lo + hi);
            stepper.dense(troot, buf);
            hits.push_back({troot, head6(buf), gi > gprev ? +1 : -1});
        }
        tprev = ti;
        gprev = gi;
    }
}

FlowResult run_flow(const Model& m, const Vec6& s0, double t, const FlowOptions& opts,
                    const EventSpec* ev, double* event_time, Vec6* event_state,
                    Mat6* event_stm,
                    std::vector<std::pair<double, Vec6>>* all_hits = nullptr) {
    require_clear_of_primaries(m, s0);
    if (ev && t < 0.0)
        throw std::invalid_argument("event search requires forward integration");
    const int n = opts.with_stm ? 42 : 6;
    double y[kMaxDim];
    std::memcpy(y, s0.data(), 6 * sizeof(double));
    if (opts.with_stm) {
        Mat6 id = Mat6::Identity();
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) y[6 + 6 * i + j] = id(i, j);
    }

    FlowResult out;
    if (opts.sample_dt > 0) out.samples.emplace_back(0.0, s0);
    if (opts.observer) {
        if (opts.with_stm) {
            Mat6 id = Mat6::Identity();
            opts.observer(0.0, s0, &id);
        } else {
            opts.observer(0.0, s0, nullptr);
        }
    }
    if (t == 0.0) {
        out.state = s0;
        out.time = 0.0;
        if (opts.with_stm) out.stm = Mat6::Identity();
        return out;
    }

    System sys{&m, n};
    Dop853 stepper(sys, opts.tol);
    double next_sample = opts.sample_dt;
    int remaining = ev ? ev->count : 0;
    bool event_done = false;
    double buf[kMaxDim];

    auto hook = [&](double ta, double tb) -> bool {
        // collision guard at the step end (the RHS also throws if a stage
        // lands inside the radius)
        const Vec6 end_state = head6(y);
        const double dist = min_primary_distance(m, end_state);
        if (dist < m.collision_radius) throw CollisionDuringFlow(tb, dist);

        if (ev) {
            std::vector<EventHit> hits;
            scan_step_for_events(stepper, *ev, ta, tb, hits);
            for (const auto& hit : hits) {
                if (ev->direction != 0 && hit.sense != ev->direction) continue;
                if (all_hits) {
                    all_hits->emplace_back(hit.time, hit.state);
                    continue;
                }
                if (--remaining == 0) {
                    *event_time = hit.time;
                    *event_state = hit.state;
                    if (opts.with_stm && event_stm) {
                        stepper.dense(hit.time, buf);
                        *event_stm = stm_of(buf);
                    }
                    event_done = true;
                    break;
                }
            }
        }
        const double dir = tb > ta ? 1.0 : -1.0;
        double limit = event_done ? *event_time : tb;
        if (opts.sample_dt > 0) {
            while (next_sample * dir <= limit * dir + 1e-15) {
                stepper.dense(next_sample, buf);
                out.samples.emplace_back(next_sample, head6(buf));
                next_sample += opts.sample_dt * dir;
            }
        }
        if (opts.observer && !event_done) {
            if (opts.with_stm) {
                Mat6 phi = stm_of(y);
                opts.observer(tb, end_state, &phi);
            } else {
                opts.observer(tb, end_state, nullptr);
            }
        }
        return !event_done;
    };

    try {
        stepper.integrate(y, 0.0, t, hook);
    } catch (const CollisionProximity& c) {
        throw CollisionDuringFlow(stepper.current_time(), c.distance);
    }

    if (ev && !event_done && !all_hits)
        throw EventNotFound("event crossing count not reached within t_max");

    if (event_done) {
        out.state = *event_state;
        out.time = *event_time;
        if (opts.with_stm) out.stm = stm_to_canonical(*event_stm);
        if (opts.observer) {
            if (opts.with_stm) {
                Mat6 phi = *event_stm;
                opts.observer(*event_time, *event_state, &phi);
            } else {
                opts.observer(*event_time, *event_state, nullptr);
            }
        }
    } else {
        out.state = head6(y);
        out.time = t;
        if (opts.with_stm) out.stm = stm_to_canonical(stm_of(y));
    }
    return out;
}

}  // namespace

EventSpec EventSpec::coordinate_zero(int index, int direction, int count) {
    EventSpec ev;
    ev.value = [index](const Vec6& s) { return s[index]; };
    ev.direction = direction;
    ev.count = count;
    return ev;
}

FlowResult flow(const Model& m, const Vec6& s0, double t, const FlowOptions& opts) {
    return run_flow(m, s0, t, opts, nullptr, nullptr, nullptr, nullptr);
}

EventResult flow_to_event(const Model& m, const Vec6& s0, const EventSpec& ev,
                          double t_max, const FlowOptions& opts) {
    double t_event = 0.0;
    Vec6 s_event;
    Mat6 phi_event;
    FlowResult res = run_flow(m, s0, t_max, opts, &ev, &t_event, &s_event, &phi_event);
    return {t_event, std::move(res)};
}

std::vector<std::pair<double, Vec6>> find_crossings(const Model& m, const Vec6& s0,
                                                    const EventSpec& ev, double t_max,
                                                    const FlowOptions& opts) {
    std::vector<std::pair<double, Vec6>> found;
    double t_event = 0.0;
    Vec6 s_event;
    run_flow(m, s0, t_max, opts, &ev, &t_event, &s_event, nullptr, &found);
    return found;
}

}  // namespace symporb
