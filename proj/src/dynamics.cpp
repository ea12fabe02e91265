#include "symporb/dynamics.hpp"

#include <cmath>

namespace symporb {

Model Model::crtbp(double mass_ratio) {
    if (!(mass_ratio > 0.0 && mass_ratio < 0.5))
        throw std::invalid_argument("CRTBP mass ratio must lie in (0, 1/2)");
    Model m;
    m.kind = ModelKind::crtbp;
    m.mu = mass_ratio;
    return m;
}

Model Model::hill() {
    Model m;
    m.kind = ModelKind::hill;
    m.mu = 0.0;
    return m;
}

Model Model::rotating_kepler() {
    Model m;
    m.kind = ModelKind::crtbp;
    m.mu = 0.0;
    return m;
}

Vec3 Model::primary_position() const {
    return is_hill() ? Vec3::Zero() : Vec3(-mu, 0.0, 0.0);
}

Vec3 Model::secondary_position() const {
    return is_hill() ? Vec3::Zero() : Vec3(1.0 - mu, 0.0, 0.0);
}

namespace {

Mat6 make_canonical_from_pv() {
    // p1 = vx - y, p2 = vy + x, p3 = vz
    Mat6 t = Mat6::Identity();
    t(3, 1) = -1.0;
    t(4, 0) = 1.0;
    return t;
}

Mat6 make_pv_from_canonical() {
    Mat6 t = Mat6::Identity();
    t(3, 1) = 1.0;
    t(4, 0) = -1.0;
    return t;
}

Mat6 make_symplectic_form() {
    Mat6 j = Mat6::Zero();
    for (int i = 0; i < 3; ++i) {
        j(i, i + 3) = 1.0;
        j(i + 3, i) = -1.0;
    }
    return j;
}

}  // namespace

const Mat6& canonical_from_pv() {
    static const Mat6 t = make_canonical_from_pv();
    return t;
}

const Mat6& pv_from_canonical() {
    static const Mat6 t = make_pv_from_canonical();
    return t;
}

const Mat6& symplectic_form() {
    static const Mat6 j = make_symplectic_form();
    return j;
}

Vec6 to_canonical(const Vec6& pv) {
    Vec6 qp = pv;
    qp[3] = pv[3] - pv[1];
    qp[4] = pv[4] + pv[0];
    return qp;
}

Vec6 from_canonical(const Vec6& qp) {
    Vec6 pv = qp;
    pv[3] = qp[3] + qp[1];
    pv[4] = qp[4] - qp[0];
    return pv;
}

double min_primary_distance(const Model& m, const Vec6& pv) {
    const Vec3 q = pv.head<3>();
    if (m.is_hill()) return q.norm();
    const double r1 = (q - m.primary_position()).norm();
    if (m.mu == 0.0) return r1;  // rotating Kepler limit: massless secondary
    const double r2 = (q - m.secondary_position()).norm();
    return std::min(r1, r2);
}

void require_clear_of_primaries(const Model& m, const Vec6& pv) {
    const double r = min_primary_distance(m, pv);
    if (r < m.collision_radius) throw CollisionProximity(r);
}

double hamiltonian(const Model& m, const Vec6& pv) {
    require_clear_of_primaries(m, pv);
    const double x = pv[0], y = pv[1], z = pv[2];
    const double v2 = pv.tail<3>().squaredNorm();
    if (m.is_hill()) {
        const double r = pv.head<3>().norm();
        return 0.5 * v2 - 1.0 / r - 1.5 * x * x + 0.5 * z * z;
    }
    const double r1 = (pv.head<3>() - m.primary_position()).norm();
    const double r2 = (pv.head<3>() - m.secondary_position()).norm();
    return 0.5 * v2 - 0.5 * (x * x + y * y) - (1.0 - m.mu) / r1 - m.mu / r2;
}

double jacobi_gamma(const Model& m, const Vec6& pv) {
    return -2.0 * hamiltonian(m, pv);
}

Vec6 hamiltonian_gradient(const Model& m, const Vec6& pv) {
    require_clear_of_primaries(m, pv);
    const double x = pv[0], y = pv[1], z = pv[2];
    Vec6 g;
    g.tail<3>() = pv.tail<3>();
    if (m.is_hill()) {
        const double r = pv.head<3>().norm();
        const double r3 = r * r * r;
        g[0] = x / r3 - 3.0 * x;
        g[1] = y / r3;
        g[2] = z / r3 + z;
        return g;
    }
    const Vec3 d1 = pv.head<3>() - m.primary_position();
    const Vec3 d2 = pv.head<3>() - m.secondary_position();
    const double r1 = d1.norm(), r2 = d2.norm();
    const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
    const Vec3 grav = (1.0 - m.mu) / r13 * d1 + m.mu / r23 * d2;
    g[0] = grav[0] - x;
    g[1] = grav[1] - y;
    g[2] = grav[2];
    return g;
}

Vec6 hamiltonian_gradient_canonical(const Model& m, const Vec6& pv) {
    // dH/d(qp) = T^{-T} dH/d(pv) with qp = T pv
    return pv_from_canonical().transpose() * hamiltonian_gradient(m, pv);
}

Vec6 vector_field(const Model& m, const Vec6& pv) {
    require_clear_of_primaries(m, pv);
    const double x = pv[0], y = pv[1], z = pv[2];
    const double vx = pv[3], vy = pv[4];
    Vec6 f;
    f.head<3>() = pv.tail<3>();
    if (m.is_hill()) {
        const double r = pv.head<3>().norm();
        const double r3 = r * r * r;
        f[3] = 2.0 * vy + 3.0 * x - x / r3;
        f[4] = -2.0 * vx - y / r3;
        f[5] = -z - z / r3;
        return f;
    }
    const Vec3 d1 = pv.head<3>() - m.primary_position();
    const Vec3 d2 = pv.head<3>() - m.secondary_position();
    const double r1 = d1.norm(), r2 = d2.norm();
    const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
    const double a = 1.0 - m.mu, b = m.mu;
    f[3] = 2.0 * vy + x - a * d1[0] / r13 - b * d2[0] / r23;
    f[4] = -2.0 * vx + y - a * d1[1] / r13 - b * d2[1] / r23;
    f[5] = -a * z / r13 - b * z / r23;
    return f;
}

namespace {

// Hessian of the effective potential, i.e. the position block of the
// acceleration Jacobian.
Eigen::Matrix3d potential_hessian(const Model& m, const Vec6& pv) {
    Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
    if (m.is_hill()) {
        const Vec3 q = pv.head<3>();
        const double r = q.norm();
        const double r3 = r * r * r, r5 = r3 * r * r;
        u = 3.0 * q * q.transpose() / r5;
        u.diagonal().array() -= 1.0 / r3;
        u(0, 0) += 3.0;
        u(2, 2) -= 1.0;
        return u;
    }
    const Vec3 d1 = pv.head<3>() - m.primary_position();
    const Vec3 d2 = pv.head<3>() - m.secondary_position();
    const double r1 = d1.norm(), r2 = d2.norm();
    const double r13 = r1 * r1 * r1, r15 = r13 * r1 * r1;
    const double r23 = r2 * r2 * r2, r25 = r23 * r2 * r2;
    const double a = 1.0 - m.mu, b = m.mu;
    u = 3.0 * a * d1 * d1.transpose() / r15 + 3.0 * b * d2 * d2.transpose() / r25;
    u.diagonal().array() -= a / r13 + b / r23;
    u(0, 0) += 1.0;
    u(1, 1) += 1.0;
    return u;
}

}  // namespace

Mat6 variational_matrix(const Model& m, const Vec6& pv) {
    require_clear_of_primaries(m, pv);
    Mat6 a = Mat6::Zero();
    a.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
    a.bottomLeftCorner<3, 3>() = potential_hessian(m, pv);
    a(3, 4) = 2.0;
    a(4, 3) = -2.0;
    return a;
}

Mat6 variational_matrix_canonical(const Model& m, const Vec6& pv) {
    return canonical_from_pv() * variational_matrix(m, pv) * pv_from_canonical();
}

Mat6 stm_to_canonical(const Mat6& stm_pv) {
    return canonical_from_pv() * stm_pv * pv_from_canonical();
}

Mat6 stm_from_canonical(const Mat6& stm_qp) {
    return pv_from_canonical() * stm_qp * canonical_from_pv();
}

namespace {

Vec6 sv(double a, double b, double c, double d, double e, double f) {
    Vec6 v;
    v << a, b, c, d, e, f;
    return v;
}

const std::vector<Symmetry>& symmetry_table() {
    static const std::vector<Symmetry> table = {
        // rho: pi-rotation about the x-axis (composed with time reversal)
        {SymmetryName::rho, sv(1, -1, -1, -1, 1, 1), sv(1, -1, -1, -1, 1, 1), true, false},
        // rho~: reflection in the xz-plane
        {SymmetryName::rho_tilde, sv(1, -1, 1, -1, 1, -1), sv(1, -1, 1, -1, 1, -1), true, false},
        // sigma = rho o rho~: reflection in the xy-plane, symplectic
        {SymmetryName::sigma, sv(1, 1, -1, 1, 1, -1), sv(1, 1, -1, 1, 1, -1), false, false},
        // kappa: pi-rotation about the y-axis (Hill only)
        {SymmetryName::kappa, sv(-1, 1, -1, 1, -1, 1), sv(-1, 1, -1, 1, -1, 1), true, true},
        // kappa~: reflection in the yz-plane (Hill only)
        {SymmetryName::kappa_tilde, sv(-1, 1, 1, 1, -1, -1), sv(-1, 1, 1, 1, -1, -1), true, true},
    };
    return table;
}

}  // namespace

const Symmetry& symmetry(SymmetryName name) {
    for (const auto& s : symmetry_table())
        if (s.name == name) return s;
    throw std::logic_error("unknown symmetry");
}

const std::vector<SymmetryName>& all_symmetries() {
    static const std::vector<SymmetryName> names = {
        SymmetryName::rho, SymmetryName::rho_tilde, SymmetryName::sigma,
        SymmetryName::kappa, SymmetryName::kappa_tilde};
    return names;
}

bool symmetry_applies(const Model& m, SymmetryName name) {
    return m.is_hill() || !symmetry(name).hill_only;
}

Vec6 apply_symmetry(SymmetryName name, const Vec6& pv) {
    return symmetry(name).signs_pv.cwiseProduct(pv);
}

Vec6 apply_symmetry_checked(const Model& m, SymmetryName name, const Vec6& pv) {
    if (!symmetry_applies(m, name))
        throw SymmetryNotApplicable(symmetry_label(name) + " is a Hill-only symmetry");
    return apply_symmetry(name, pv);
}

std::string symmetry_label(SymmetryName name) {
    switch (name) {
        case SymmetryName::rho: return "rho";
        case SymmetryName::rho_tilde: return "rho_tilde";
        case SymmetryName::sigma: return "sigma";
        case SymmetryName::kappa: return "kappa";
        case SymmetryName::kappa_tilde: return "kappa_tilde";
    }
    throw std::logic_error("unknown symmetry");
}

SymmetryName symmetry_from_label(const std::string& label) {
    for (SymmetryName n : all_symmetries())
        if (symmetry_label(n) == label) return n;
    throw std::invalid_argument("unknown symmetry label: " + label);
}

std::vector<int> fixed_locus_coordinates(SymmetryName name) {
    std::vector<int> idx;
    const Vec6& s = symmetry(name).signs_pv;
    for (int i = 0; i < 6; ++i)
        if (s[i] < 0) idx.push_back(i);
    return idx;
}

double fixed_locus_distance(SymmetryName name, const Vec6& pv) {
    double d = 0.0;
    for (int i : fixed_locus_coordinates(name)) d = std::max(d, std::abs(pv[i]));
    return d;
}

}  // namespace symporb
