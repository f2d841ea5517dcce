// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/dynamics.hpp"
#include "lagdrift/flowfield.hpp"
#include "lagdrift/integrate.hpp"
#include "lagdrift/learn/features.hpp"
#include "lagdrift/learn/lstm.hpp"

#include <memory>
#include <vector>

namespace lagdrift::learn {

/// Reduced Maxey-Riley drifter on gridded current + wind fields, without H.
class DeterministicModel {
  public:
    DeterministicModel(std::shared_ptr<const flowfield::GriddedVelocityField> current,
                       std::shared_ptr<const flowfield::GriddedVelocityField> wind,
                       dynamics::DrifterParams params, flowfield::SampleOptions options = {});

    struct Point {
        Vec2 velocity;          // m/s
        FeatureVector features;
    };

    /// Samples the fields once; throws lagdrift::Error on coverage problems.
    Point evaluate(const GeoPoint& p, double t) const;
    Vec2 velocity(const GeoPoint& p, double t) const { return evaluate(p, t).velocity; }
    FeatureVector features(const GeoPoint& p, double t) const { return evaluate(p, t).features; }

    const dynamics::DrifterParams& params() const { return params_; }
    integrate::VelocityModel as_velocity_model() const;

  private:
    std::shared_ptr<const flowfield::GriddedVelocityField> current_;
    std::shared_ptr<const flowfield::GriddedVelocityField> wind_;
    dynamics::DrifterParams params_;
    flowfield::SampleOptions options_;
};

/// Features along a track. Samples whose fields could not be evaluated are gaps:
/// `valid[k] == 0` and the other entries are zero.
struct FeatureSequence {
    std::vector<FeatureVector> features;
    std::vector<Vec2> deterministic;  // model velocity at the real position
    std::vector<std::uint8_t> valid;
    std::size_t gap_count() const;
};

FeatureSequence build_features(const integrate::Trajectory& track, const DeterministicModel& model);

/// Residual windows (drifter velocity minus deterministic velocity) from contiguous
/// gap-free runs, chopped into pieces of at most `truncation` steps.
std::vector<TrainingSample> build_training_samples(const std::vector<integrate::Trajectory>& tracks,
                                                   const DeterministicModel& model, int truncation);

/// Appends xi(p, t) to the member's history and returns the deterministic velocity
/// plus the network correction. `lstm == nullptr` means no correction.
Vec2 blended_velocity(const GeoPoint& p, double t, LstmState& history,
                      const DeterministicModel& model, const LstmModel* lstm);

/// Velocity model for one free-running ensemble member. The correction is refreshed
/// once per step from the member's own modeled position and held over the RK4 stages.
integrate::MemberModel make_blended_member(const DeterministicModel& model, const LstmModel* lstm);

/// Single-step prediction along the real positions of `track`.
struct SingleStepPrediction {
    std::vector<Vec2> deterministic;
    std::vector<Vec2> blended;
    std::vector<std::uint8_t> valid;
};

SingleStepPrediction predict_single_step(const integrate::Trajectory& track,
                                         const DeterministicModel& model, const LstmModel* lstm);

}  // namespace lagdrift::learn
