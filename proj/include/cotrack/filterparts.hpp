#pragma once

// The FilterParts pathway: a bank of patch classifiers learned in one
// closed-form solve, voting for the object center, with a
// candidate -> reliable -> gold lifecycle driven by vote co-occurrence.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cotrack/features.hpp"
#include "cotrack/votemap.hpp"

namespace cotrack {

enum class PartState { Candidate, Reliable, Gold };

const char* to_string(PartState s);

struct FilterPart {
    Eigen::VectorXd classifier;  // unit L2 norm, length side^2 * depth
    PatchGeometry geometry;
    PartState state = PartState::Candidate;
    int birth_frame = 0;
    int votes_cast = 0;
    int votes_agreeing = 0;
    std::uint64_t id = 0;  // creation order, used for deterministic tie-breaks

    /// Agreement frequency over the current monitoring window.
    double reliability() const {
        return votes_cast > 0 ? static_cast<double>(votes_agreeing) / votes_cast : 0.0;
    }
    bool votes() const { return state != PartState::Candidate; }
};

struct PartBankConfig {
    double t_d = 1.4;       // discriminativeness ratio
    double p_plus = 0.2;    // promote when f > p_plus
    double p_minus = 0.1;   // remove when f <= p_minus
    int update_every = 10;  // U
    int n_max = 200;        // voting parts per scale
    int min_support = 5;    // votes needed in a window before promotion
    int n_hard_negatives = 64;
    int n_random_negatives = 16;
    int stride = 2;
    double lambda = 0.1;
    bool single_role = false;  // ablation: every part votes, no monitoring
};

struct PartBank {
    PartBankConfig cfg;
    std::array<int, 3> scales{};  // patch sides; zero means derive from the box
    std::vector<FilterPart> parts;
    std::uint64_t next_id = 0;

    int count(PartState s) const;
    int count(PartState s, int scale_index) const;
};

/// One-vs-all classifiers for each positive against all other rows (positives
/// first, then negatives), in a single ridge solve. Returns k x P with unit columns.
Eigen::MatrixXd learn_bank(const std::vector<Eigen::VectorXd>& positives,
                           const std::vector<Eigen::VectorXd>& negatives, double lambda);

/// own / max-negative response ratio test; a non-positive max negative passes
/// whenever the own response is positive.
bool is_discriminative(double own, double max_negative, double t_d);

/// Outside-box negatives for one patch side: the densest-edge windows first,
/// then random ones (which also fill in when edges are absent).
std::vector<PatchGeometry> pick_negatives(const FeatureStack& stack, const Box& box, int side, int scale_index,
                                          const PartBankConfig& cfg, std::mt19937_64& rng);

struct SelectionReport {
    std::vector<FilterPart> accepted;  // new Candidates
    std::optional<FilterPart> best;    // highest-ratio part evaluated, accepted or not
    double best_ratio = 0.0;
    int evaluated = 0;
};

/// Learns and tests parts at grid points of `box` (feature coordinates) not yet
/// covered by a live part of the bank; smaller sides take priority per point.
SelectionReport select_parts(const FeatureStack& stack, const Box& box, const PartBank& bank, int frame,
                             std::mt19937_64& rng);

/// Non-negative response of one part, shifted so each window votes for the
/// object center it implies.
VoteMap response_map(const FilterPart& part, const FeatureStack& stack);

struct PartResponses {
    std::vector<VoteMap> maps;                // one per bank part
    std::vector<std::optional<Peak>> peaks;   // argmax, empty when the map is all zero
};

/// Response maps for every part, batched per patch side.
PartResponses respond_all(const PartBank& bank, const FeatureStack& stack);

struct Aggregate {
    VoteMap map;
    int voters = 0;
    bool no_voters() const { return voters == 0; }
};

/// Mean response of the voting parts, Gaussian-smoothed.
Aggregate aggregate_votes(const PartBank& bank, const PartResponses& responses, double sigma_g);
Aggregate aggregate_votes(const PartBank& bank, const FeatureStack& stack, double sigma_g);

/// Agreement radius: max(min_px, fraction * search side).
double agreement_radius(int search_side, double fraction = 0.05, double min_px = 3.0);

/// Counts one vote for each monitored part, agreeing when its peak lies within
/// `radius` of `chosen`.
void record_cooccurrence(PartBank& bank, const std::vector<std::optional<Peak>>& peaks, const Point& chosen,
                         double radius);

/// Promote / remove monitored parts and reset their counters. `frame` must be a
/// multiple of the update cadence.
void lifecycle_update(PartBank& bank, int frame);

/// Caps voting parts per scale at n_max by dropping young reliable parts that
/// duplicate older ones.
void enforce_budget(PartBank& bank);

}  // namespace cotrack
