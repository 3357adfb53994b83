#include "strongsde/field.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace strongsde {

Envelope Envelope::constant(double c, double t_end) {
    return {[c, t_end](double t) { return (t >= 0.0 && t <= t_end) ? c : 0.0; }, {0.0, t_end}};
}

ScalarField ScalarField::scaled(double c) const {
    ScalarField out = *this;
    auto inner = fn;
    out.fn = [inner, c](double t, const Vec& x) { return c * inner(t, x); };
    return out;
}

double frobenius(const Gradient& g) {
    double s = 0.0;
    for (const auto& m : g) s += m.squaredNorm();
    return std::sqrt(s);
}

Mat CoefficientField::sigma(double t, const Vec& x) const {
    Mat out(d, d1);
    sigma_fn(t, x, out);
    return out;
}

void CoefficientField::sigma_into(double t, const Vec& x, Mat& out) const {
    out.resize(d, d1);
    sigma_fn(t, x, out);
}

namespace {
bool in_horizon(double t, double t_max) { return t >= 0.0 && t <= t_max; }

Gradient zero_gradient(int d, int d1) { return Gradient(static_cast<size_t>(d), Mat::Zero(d, d1)); }
}  // namespace

Vec CoefficientField::b_M(double t, const Vec& x) const {
    Vec out = Vec::Zero(d);
    if (b_M_fn && in_horizon(t, t_max)) b_M_fn(t, x, out);
    return out;
}

Vec CoefficientField::b_B(double t, const Vec& x) const {
    Vec out = Vec::Zero(d);
    if (b_B_fn && in_horizon(t, t_max)) b_B_fn(t, x, out);
    return out;
}

Vec CoefficientField::b(double t, const Vec& x) const { return b_M(t, x) + b_B(t, x); }

void CoefficientField::b_into(double t, const Vec& x, Vec& out, Vec& scratch) const {
    out.setZero(d);
    if (!in_horizon(t, t_max)) return;
    if (b_M_fn) b_M_fn(t, x, out);
    if (b_B_fn) {
        scratch.setZero(d);
        b_B_fn(t, x, scratch);
        out += scratch;
    }
}

Gradient CoefficientField::dsigma_M(double t, const Vec& x) const {
    Gradient g = zero_gradient(d, d1);
    if (dsigma_M_fn) dsigma_M_fn(t, x, g);
    return g;
}

Gradient CoefficientField::dsigma_B(double t, const Vec& x) const {
    Gradient g = zero_gradient(d, d1);
    if (dsigma_B_fn) dsigma_B_fn(t, x, g);
    return g;
}

Gradient CoefficientField::dsigma(double t, const Vec& x) const {
    Gradient g = dsigma_M(t, x);
    Gradient gb = dsigma_B(t, x);
    for (size_t l = 0; l < g.size(); ++l) g[l] += gb[l];
    return g;
}

namespace {
std::optional<SpatialSingularity> first_or_none(const std::vector<SpatialSingularity>& v) {
    if (v.empty()) return std::nullopt;
    return v.front();
}
}  // namespace

ScalarField CoefficientField::b_M_norm() const {
    ScalarField f;
    f.d = d;
    auto self = std::make_shared<CoefficientField>(*this);
    f.fn = [self](double t, const Vec& x) { return self->b_M(t, x).norm(); };
    f.space_sing = first_or_none(b_M_singular);
    return f;
}

ScalarField CoefficientField::b_norm() const {
    ScalarField f;
    f.d = d;
    auto self = std::make_shared<CoefficientField>(*this);
    f.fn = [self](double t, const Vec& x) { return self->b(t, x).norm(); };
    f.space_sing = first_or_none(b_M_singular);
    return f;
}

ScalarField CoefficientField::dsigma_M_norm() const {
    ScalarField f;
    f.d = d;
    auto self = std::make_shared<CoefficientField>(*this);
    f.fn = [self](double t, const Vec& x) { return frobenius(self->dsigma_M(t, x)); };
    f.space_sing = first_or_none(dsigma_M_singular);
    return f;
}

std::string BandViolation::describe() const {
    std::ostringstream os;
    os << "eigenvalue " << eigenvalue << " outside [" << lower << ", " << upper << "] at t=" << t
       << ", x=(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

AssembledDiffusion assemble_a(const CoefficientField& field, double t, const Vec& x) {
    return assemble_a(field, t, x, field.delta, 1.0 / field.delta);
}

AssembledDiffusion assemble_a(const CoefficientField& field, double t, const Vec& x, double lower,
                              double upper) {
    AssembledDiffusion out;
    const Mat s = field.sigma(t, x);
    out.a = s * s.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(out.a, Eigen::EigenvaluesOnly);
    out.eigenvalues = es.eigenvalues();
    // relative slack for rounding in sigma sigma^*
    const double tol = 1e-12 * std::max(1.0, upper);
    for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
        const double ev = out.eigenvalues[i];
        if (ev < lower - tol || ev > upper + tol) {
            out.violation = BandViolation{t, x, ev, lower, upper};
            break;
        }
    }
    return out;
}

Mat sqrt_spd(const Mat& a) {
    if (a.rows() != a.cols() || a.rows() == 0) throw InvalidInput("sqrt_spd: matrix must be square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidInput("sqrt_spd: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success) throw NumericalFailure("sqrt_spd: eigen decomposition failed");
    const Vec ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0) throw InvalidInput("sqrt_spd: matrix is not positive definite");
    const Mat& v = es.eigenvectors();
    return v * ev.cwiseSqrt().asDiagonal() * v.transpose();
}

}  // namespace strongsde
