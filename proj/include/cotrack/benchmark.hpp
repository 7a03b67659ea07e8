#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cotrack/config.hpp"
#include "cotrack/sequence.hpp"
#include "cotrack/tracker.hpp"

namespace cotrack {

/// Anything that can be initialized on a box and then stepped frame by frame.
class Tracker {
public:
    virtual ~Tracker() = default;
    virtual void init(const Image& frame, const Box& box, int index) = 0;
    virtual Box step(const Image& frame, int index) = 0;
    /// Diagnostics of the most recent step, when the tracker has any.
    virtual const StepDiagnostics* diagnostics() const { return nullptr; }
};

class SocietyTracker : public Tracker {
public:
    SocietyTracker(TrackerConfig cfg, std::uint64_t seed, bool keep_maps = false)
        : cfg_(std::move(cfg)), seed_(seed), keep_maps_(keep_maps) {}
    void init(const Image& frame, const Box& box, int index) override;
    Box step(const Image& frame, int index) override;
    const StepDiagnostics* diagnostics() const override { return last_ ? &*last_ : nullptr; }
    const TrackerState& state() const { return *state_; }

private:
    TrackerConfig cfg_;
    std::uint64_t seed_;
    bool keep_maps_;
    std::optional<TrackerState> state_;
    std::optional<StepDiagnostics> last_;
};

/// Reports the ground truth; used to check the harness itself.
class OracleTracker : public Tracker {
public:
    explicit OracleTracker(std::vector<std::optional<Box>> gt) : gt_(std::move(gt)) {}
    void init(const Image&, const Box&, int) override {}
    Box step(const Image&, int index) override;

private:
    std::vector<std::optional<Box>> gt_;
};

/// Never moves from the initialization box.
class FrozenTracker : public Tracker {
public:
    void init(const Image&, const Box& box, int) override { box_ = box; }
    Box step(const Image&, int) override { return box_; }

private:
    Box box_;
};

enum class FrameStatus { Init, Tracked, Failed, Skipped };

struct FrameRecord {
    int index = 0;  // 0-based
    FrameStatus status = FrameStatus::Tracked;
    Box box;
    Point center;  // the tracker's center estimate; the box center when it has none
    std::optional<double> iou;
    std::optional<double> distance;
    bool hcf = false;
    int candidates = 0;
    int reliable = 0;
    int gold = 0;
};

struct MetricsReport {
    std::string sequence;
    std::vector<FrameRecord> frames;
    double accuracy = 0.0;  // mean IoU over tracked, non-failed frames
    int failures = 0;
    double eao = 0.0;
    int tracked_frames = 0;
    double mean_step_ms = 0.0;
};

inline constexpr int kSkipAfterFailure = 5;
inline constexpr int kSnippetLength = 30;

/// Steps `tracker` through `seq`. With `reinit`, a zero-IoU frame counts as a
/// failure, the next kSkipAfterFailure frames are skipped and the tracker is
/// re-initialized from ground truth on the frame after that.
MetricsReport run_benchmark(const Sequence& seq, Tracker& tracker, bool reinit);
MetricsReport run_benchmark(const Sequence& seq, const TrackerConfig& cfg, std::uint64_t seed, bool reinit);

/// Mean over consecutive kSnippetLength-frame snippets of the per-frame score:
/// IoU until a failure inside the snippet, 0 from then on and on skipped frames.
double eao_lite(const std::vector<FrameRecord>& frames, int snippet = kSnippetLength);

struct Variant {
    std::string name;
    TrackerConfig cfg;
};

/// Variants of an ablation suite: "pathways", "roles" or "hcf".
std::vector<Variant> ablation_variants(const std::string& suite, const TrackerConfig& base = {});
std::vector<std::string> ablation_suites();

struct AblationCell {
    std::string variant;
    std::string scenario;
    std::uint64_t seed = 0;
    int failures = 0;
    double accuracy = 0.0;
    double eao = 0.0;
};

struct Verdict {
    std::string statement;
    bool holds = false;
};

struct AblationReport {
    std::string suite;
    std::vector<AblationCell> cells;
    std::vector<Verdict> verdicts;

    int failures(const std::string& variant, const std::string& scenario) const;
    std::string format() const;
};

/// Runs every variant of the suite on the scenarios (default: the standard set)
/// for each seed, with reinitialization.
AblationReport run_ablation(const std::string& suite, const std::vector<std::uint64_t>& seeds,
                            std::vector<std::string> scenarios = {}, const TrackerConfig& base = {});

const char* to_string(FrameStatus s);

}  // namespace cotrack
