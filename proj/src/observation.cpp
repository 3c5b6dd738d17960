#include "enkbf/observation.hpp"

#include "enkbf/errors.hpp"

#include <Eigen/LU>

#include <cmath>

namespace enkbf {

const Eigen::MatrixXd& ObservationModel::gamma_at(double t) const {
    if (schedule.empty()) return Gamma;
    const Eigen::MatrixXd* current = &Gamma;
    for (const auto& [start, gamma] : schedule) {
        if (t >= start) current = &gamma;
    }
    return *current;
}

ObservationModel ObservationModel::make(ObservationKind kind,
                                        const BasisSpec& basis,
                                        const std::vector<int>& indices,
                                        double s, double gamma) {
    if (indices.empty())
        throw invalid_argument_error("ObservationModel: no observed modes");
    std::vector<SpectralField> functionals;
    functionals.reserve(indices.size());
    for (int idx : indices) {
        if (idx < 1 || idx > basis.M)
            throw invalid_argument_error(
                "ObservationModel: observed mode index out of range");
        SpectralField h = SpectralField::Zero(basis.M);
        h[idx - 1] = 1.0;
        functionals.push_back(std::move(h));
    }
    const int d = static_cast<int>(indices.size());
    if (gamma < 0.0)
        throw invalid_argument_error("ObservationModel: gamma must be >= 0");
    return make_general(kind, std::move(functionals), s,
                        gamma * Eigen::MatrixXd::Identity(d, d));
}

ObservationModel ObservationModel::make_general(
    ObservationKind kind, std::vector<SpectralField> functionals, double s,
    const Eigen::MatrixXd& Gamma) {
    if (functionals.empty())
        throw invalid_argument_error("ObservationModel: no functionals");
    if (kind == ObservationKind::BoundedTanh && !(s > 0.0))
        throw invalid_argument_error("ObservationModel: saturation must be > 0");
    ObservationModel m;
    m.kind = kind;
    m.d_y = static_cast<int>(functionals.size());
    m.functionals = std::move(functionals);
    m.saturation = s;
    if (Gamma.rows() != m.d_y)
        throw invalid_argument_error("ObservationModel: Gamma row mismatch");
    m.Gamma = Gamma;
    m.R = Gamma * Gamma.transpose();
    // Gamma = 0 is legal for observation generation (noise-free paths); the
    // precision matrix is then left empty and any filter that needs it
    // rejects the model.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m.R);
    if (lu.isInvertible()) m.R_inv = lu.inverse();
    return m;
}

Eigen::VectorXd observe(const ObservationModel& model, const SpectralField& v) {
    Eigen::VectorXd out(model.d_y);
    for (int j = 0; j < model.d_y; ++j) {
        if (model.functionals[j].size() != v.size())
            throw invalid_argument_error("observe: field size mismatch");
        const double z = h_dot(model.functionals[j], v);
        out[j] = model.kind == ObservationKind::Linear
                     ? z
                     : model.saturation * std::tanh(z / model.saturation);
    }
    return out;
}

ObservationPath generate_observation_path(const SignalPath& signal,
                                          const ObservationModel& model,
                                          const StreamKey& key) {
    const int steps = static_cast<int>(signal.times.size()) - 1;
    if (steps < 0)
        throw invalid_argument_error("generate_observation_path: empty path");
    ObservationPath path;
    path.times = signal.times;
    path.increments.resize(steps);
    Stream stream(key);
    Eigen::VectorXd xi(model.d_v());
    for (int n = 0; n < steps; ++n) {
        const double dt = signal.times[n + 1] - signal.times[n];
        stream.fill_normals(std::uint32_t(n), xi.data(),
                            static_cast<int>(xi.size()));
        path.increments[n] = observe(model, signal.states[n]) * dt +
                             model.gamma_at(signal.times[n]) *
                                 (std::sqrt(dt) * xi);
    }
    return path;
}

Eigen::MatrixXd observation_matrix(const ObservationModel& model, int M) {
    Eigen::MatrixXd H(model.d_y, M);
    for (int j = 0; j < model.d_y; ++j) {
        if (model.functionals[j].size() != M)
            throw invalid_argument_error("observation_matrix: size mismatch");
        H.row(j) = model.functionals[j].transpose();
    }
    return H;
}

} // namespace enkbf
