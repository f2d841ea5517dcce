// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/learn/blended.hpp"

#include "lagdrift/error.hpp"

#include <algorithm>

namespace lagdrift::learn {

DeterministicModel::DeterministicModel(
    std::shared_ptr<const flowfield::GriddedVelocityField> current,
    std::shared_ptr<const flowfield::GriddedVelocityField> wind, dynamics::DrifterParams params,
    flowfield::SampleOptions options)
    : current_(std::move(current)), wind_(std::move(wind)), params_(params), options_(options) {
    if (!current_ || !wind_) throw Error(ErrorCode::InvalidArgument, "model needs both fields");
}

DeterministicModel::Point DeterministicModel::evaluate(const GeoPoint& p, double t) const {
    const auto sf = flowfield::sample_surface_flow(*current_, *wind_, p.lon, p.lat, t, options_);
    const dynamics::FlowSample si{sf.u, sf.dudt, sf.u_e, sf.u_wind,
                                  dynamics::coriolis_parameter(p.lat)};
    return {dynamics::reduced_mr_velocity_si(si, params_), {sf.u, sf.u_e, sf.dudt}};
}

integrate::VelocityModel DeterministicModel::as_velocity_model() const {
    return [this](const GeoPoint& p, double t) { return velocity(p, t); };
}

std::size_t FeatureSequence::gap_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{0}));
}

namespace {

bool is_coverage_error(const Error& e) {
    switch (e.code()) {
        case ErrorCode::OutOfDomain:
        case ErrorCode::InsufficientMargin:
        case ErrorCode::MaskedSupport:
        case ErrorCode::EquatorialBand:
            return true;
        default:
            return false;
    }
}

}  // namespace

FeatureSequence build_features(const integrate::Trajectory& track, const DeterministicModel& model) {
    FeatureSequence seq;
    const std::size_t n = track.size();
    seq.features.resize(n);
    seq.deterministic.resize(n);
    seq.valid.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        try {
            const auto pt = model.evaluate(track.positions[k], track.times[k]);
            seq.features[k] = pt.features;
            seq.deterministic[k] = pt.velocity;
            seq.valid[k] = 1;
        } catch (const Error& e) {
            if (!is_coverage_error(e)) throw;
        }
    }
    return seq;
}

std::vector<TrainingSample> build_training_samples(const std::vector<integrate::Trajectory>& tracks,
                                                   const DeterministicModel& model, int truncation) {
    if (truncation < 1) throw Error(ErrorCode::InvalidArgument, "truncation must be >= 1");
    std::vector<TrainingSample> out;
    for (const auto& track : tracks) {
        const FeatureSequence seq = build_features(track, model);
        TrainingSample current;
        auto flush = [&] {
            if (!current.features.empty()) out.push_back(std::move(current));
            current = {};
        };
        for (std::size_t k = 0; k < track.size(); ++k) {
            const bool usable = seq.valid[k] && track.status[k] == integrate::SampleStatus::Ok;
            if (!usable) {
                flush();
                continue;
            }
            current.features.push_back(seq.features[k]);
            current.targets.push_back(track.velocities[k] - seq.deterministic[k]);
            if (static_cast<int>(current.features.size()) == truncation) flush();
        }
        flush();
    }
    return out;
}

Vec2 blended_velocity(const GeoPoint& p, double t, LstmState& history,
                      const DeterministicModel& model, const LstmModel* lstm) {
    const auto pt = model.evaluate(p, t);
    if (!lstm) return pt.velocity;
    return pt.velocity + lstm_step(*lstm, history, pt.features);
}

namespace {

struct BlendedMemberState {
    const DeterministicModel* model;
    const LstmModel* lstm;
    LstmState history;
    Vec2 correction;
};

}  // namespace

integrate::MemberModel make_blended_member(const DeterministicModel& model, const LstmModel* lstm) {
    auto state = std::make_shared<BlendedMemberState>();
    state->model = &model;
    state->lstm = lstm;
    if (lstm) state->history = LstmState::zeros(lstm->hidden());
    integrate::MemberModel member;
    member.hook = [state](const GeoPoint& p, double t) {
        if (!state->lstm) return;
        const auto features = state->model->features(p, t);
        state->correction = lstm_step(*state->lstm, state->history, features);
    };
    member.velocity = [state](const GeoPoint& p, double t) {
        if (!state->lstm) return state->model->velocity(p, t);
        return state->model->velocity(p, t) + state->correction;
    };
    return member;
}

SingleStepPrediction predict_single_step(const integrate::Trajectory& track,
                                         const DeterministicModel& model, const LstmModel* lstm) {
    const FeatureSequence seq = build_features(track, model);
    SingleStepPrediction out;
    out.deterministic = seq.deterministic;
    out.blended = seq.deterministic;
    out.valid = seq.valid;
    if (!lstm) return out;
    LstmState state = LstmState::zeros(lstm->hidden());
    for (std::size_t k = 0; k < track.size(); ++k) {
        if (!seq.valid[k]) continue;
        out.blended[k] = seq.deterministic[k] + lstm_step(*lstm, state, seq.features[k]);
    }
    return out;
}

}  // namespace lagdrift::learn
