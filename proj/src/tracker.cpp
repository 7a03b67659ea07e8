#include "cotrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "cotrack/binary_io.hpp"
#include "cotrack/convnet_io.hpp"
#include "cotrack/error.hpp"

namespace cotrack {

namespace {

Box box_to_crop(const Box& b, const CoordinateMap& m) {
    const Point tl = m.to_crop({b.x, b.y});
    return {tl.x, tl.y, b.w / m.scale, b.h / m.scale};
}

// At unit scale the crop is taken on the integer lattice so pixels copy exactly.
SearchCrop crop_at(const TrackerState& s, const Image& frame, const Point& center) {
    Point c = center;
    if (s.frame_side == s.crop_side) c = {std::round(c.x), std::round(c.y)};
    return crop_square(frame, c, s.frame_side, s.crop_side);
}

void assign_ids(PartBank& bank, std::vector<FilterPart>& parts) {
    for (FilterPart& p : parts) p.id = bank.next_id++;
}

Sample sample_from(const FeatureStack& stack, const Point& crop_center, const TrackerState& s,
                   convnet::SampleSource source) {
    const int factor = s.net_factor();
    const Point c{std::clamp(crop_center.x, 0.0, stack.width - 1.0), std::clamp(crop_center.y, 0.0, stack.height - 1.0)};
    const double radius = s.cfg.target_fraction > 0.0 ? s.cfg.target_fraction * s.crop_side / factor
                                                    : convnet::default_target_radius(s.crop_side, factor);
    return convnet::make_sample(convnet::to_tensor(stack), c, radius, factor, s.frame, source);
}

void train_on(TrackerState& s, const std::vector<Sample>& base) {
    if (base.empty() || s.cfg.epochs == 0) return;
    const int max_shift = static_cast<int>(std::lround(s.cfg.shift_fraction * s.crop_side));
    std::vector<Sample> augmented;
    augmented.reserve(base.size() * 2);
    for (const Sample& b : base)
        for (Sample& a : convnet::augment_shift(b, max_shift, s.net_factor(), s.rng)) augmented.push_back(std::move(a));
    convnet::train_epochs(s.net, s.adam, augmented, s.cfg.epochs, s.rng);
}

Box clip_box(const Box& b, int w, int h) {
    const double x0 = std::clamp(b.x, 0.0, w - 1.0);
    const double y0 = std::clamp(b.y, 0.0, h - 1.0);
    const double x1 = std::clamp(b.x + b.w, x0 + 1.0, static_cast<double>(w));
    const double y1 = std::clamp(b.y + b.h, y0 + 1.0, static_cast<double>(h));
    return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

std::pair<int, double> search_geometry(const TrackerConfig& cfg, double box_w, double box_h) {
    const double natural = cfg.search_factor * std::max(box_w, box_h);
    const int rounded = 4 * static_cast<int>(std::ceil(std::round(natural) / 4.0));
    const int minimum = 4 * cfg.plan.downsample();
    if (rounded <= cfg.max_search_side) {
        const int side = std::max(rounded, minimum);
        return {side, static_cast<double>(side)};
    }
    return {cfg.max_search_side, natural};
}

TrackerState tracker_init(const Image& frame, const Box& box, const TrackerConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    if (frame.width <= 0 || frame.height <= 0) throw InvalidInput("tracker_init: empty frame");
    if (!(box.w > 0.0) || !(box.h > 0.0) || !std::isfinite(box.x) || !std::isfinite(box.y))
        throw InvalidInput("tracker_init: box must have positive size");
    const Point c = box.center();
    if (c.x < 0.0 || c.y < 0.0 || c.x >= frame.width || c.y >= frame.height)
        throw InvalidInput("tracker_init: box center lies outside the frame");

    TrackerState s;
    s.cfg = cfg;
    s.seed = seed;
    s.frame = 1;
    s.frame_width = frame.width;
    s.frame_height = frame.height;
    s.center = c;
    s.box = box;
    s.reference = box;
    std::tie(s.crop_side, s.frame_side) = search_geometry(cfg, box.w, box.h);
    s.rng.seed(seed);

    const SearchCrop crop = crop_at(s, frame, c);
    FeatureStack stack = extract_channels(crop.image, cfg.features);
    stack.map = crop.map;
    const Box cbox = box_to_crop(box, crop.map);

    s.bank.cfg = cfg.parts;
    s.bank.scales = default_scales(cbox.w, cbox.h);
    SelectionReport rep = select_parts(stack, cbox, s.bank, 1, s.rng);
    std::vector<FilterPart> seeded = std::move(rep.accepted);
    if (seeded.empty() && rep.best) seeded.push_back(*rep.best);
    if (seeded.empty()) throw InvalidInput("tracker_init: box too small to hold a part");
    for (FilterPart& p : seeded) p.state = PartState::Reliable;
    assign_ids(s.bank, seeded);
    s.bank.parts = std::move(seeded);

    s.net = convnet::net_init<float>(seed, cfg.plan);
    s.adam = convnet::AdamState<float>::for_net(s.net, cfg.adam);
    s.archive.push_back(sample_from(stack, crop.map.to_crop(c), s, convnet::SampleSource::InitialFrame));
    return s;
}

StepDiagnostics tracker_step(TrackerState& s, const Image& frame, bool keep_maps) {
    if (s.frame < 1) throw InvalidInput("tracker_step: state is not initialized");
    if (frame.width != s.frame_width || frame.height != s.frame_height)
        throw InvalidInput("tracker_step: frame size differs from the first frame");
    const TrackerConfig& cfg = s.cfg;
    const int t = ++s.frame;
    const int n_boot = cfg.bootstrap_frames;
    const bool bootstrap = t <= n_boot;

    StepDiagnostics d;
    d.frame = t;
    d.bootstrap = bootstrap;

    const SearchCrop crop = crop_at(s, frame, s.center);
    FeatureStack stack = extract_channels(crop.image, cfg.features);
    stack.map = crop.map;
    d.map = crop.map;
    const int side = s.crop_side;
    const Point prev = crop.map.to_crop(s.center);

    const bool use_filter = bootstrap || cfg.pathways != PathwayMode::ConvNetOnly;
    const bool use_net = !bootstrap && cfg.pathways != PathwayMode::FilterPartsOnly;
    d.alpha = !use_net ? 1.0 : !use_filter ? 0.0 : cfg.alpha;

    VoteMap fmap(side, side, MapKind::FilterParts);
    VoteMap cmap(side, side, MapKind::ConvNet);
    PartResponses responses;
    std::optional<Peak> fpeak, cpeak;
    if (use_filter) {
        responses = respond_all(s.bank, stack);
        Aggregate agg = aggregate_votes(s.bank, responses, cfg.sigma_g);
        d.voters = agg.voters;
        if (!agg.no_voters()) fmap = std::move(agg.map);
        const Peak p = argmax(fmap);
        if (p.value > 0.0) fpeak = p;
        d.filter_peak = p.value;
        if (fpeak) d.filter_center = crop.map.to_frame(refine_peak(fmap, *fpeak));
        normalize_max(fmap);
    }
    if (use_net) {
        const auto raw = convnet::forward(s.net, convnet::to_tensor(stack));
        VoteMap up(side, side, MapKind::ConvNet);
        up.values = convnet::upsample(raw, s.net_factor());
        // The net's vote is its raw argmax, so an all-negative output still
        // yields a location for the HCF distance.
        cpeak = argmax(up);
        d.net_peak = cpeak->value;
        d.net_center = crop.map.to_frame(refine_peak(up, *cpeak));
        cmap.values = up.values.max(0.0);
        normalize_max(cmap);
    }

    const VoteMap mask = uncertainty_mask(prev, side, side, cfg.mask_sigma_fraction * side);
    VoteMap fused = fuse(fmap, cmap, mask, d.alpha);
    const CenterPick pick = pick_center(fused, prev);
    d.degenerate = pick.degenerate;

    // Parts that agree with the chosen center drive the box estimate.
    const double radius = agreement_radius(side, cfg.agreement_fraction, cfg.agreement_min_px);
    std::vector<Correspondence> matches;
    if (use_filter) {
        record_cooccurrence(s.bank, responses.peaks, pick.center, radius);
        for (std::size_t i = 0; i < s.bank.parts.size(); ++i) {
            const FilterPart& part = s.bank.parts[i];
            const auto& pk = responses.peaks[i];
            if (!(part.votes() || cfg.parts.single_role) || !pk) continue;
            if (std::hypot(pk->x - pick.center.x, pk->y - pick.center.y) > radius) continue;
            const Point dd{part.geometry.dx, part.geometry.dy};
            matches.push_back({crop.map.to_frame({pick.center.x + dd.x, pick.center.y + dd.y}),
                               crop.map.to_frame({pk->x + dd.x, pk->y + dd.y})});
        }
    }
    d.matches = static_cast<int>(matches.size());

    Point next = crop.map.to_frame(pick.center);
    next.x = std::clamp(next.x, 0.0, s.frame_width - 1.0);
    next.y = std::clamp(next.y, 0.0, s.frame_height - 1.0);
    const Box& base = matches.size() >= 3 ? s.reference : s.box;
    s.box = clip_box(estimate_box(matches, base, next, s.frame_width, s.frame_height), s.frame_width, s.frame_height);
    s.center = next;
    d.center = next;
    d.box = s.box;

    // HCF gate: only once both pathways vote.
    if (!bootstrap && fpeak && cpeak) {
        const double dist = distance(*d.filter_center, *d.net_center);
        d.distance = dist;
        d.hcf = hcf_gate(s.distances, dist, cfg.hcf_percentile, cfg.hcf_min_history);
        if (d.hcf) ++s.hcf_frames;
    }
    const bool net_learns = cfg.pathways != PathwayMode::FilterPartsOnly;
    if (bootstrap && net_learns) {
        s.archive.push_back(sample_from(stack, pick.center, s, convnet::SampleSource::InitialFrame));
    } else if (!bootstrap && use_net) {
        const bool keep = cfg.net_update == NetUpdate::Full || (cfg.net_update == NetUpdate::Hcf && d.hcf);
        if (keep) {
            s.hcf_buffer.push_back(sample_from(stack, pick.center, s, convnet::SampleSource::Hcf));
            while (static_cast<int>(s.hcf_buffer.size()) > n_boot) s.hcf_buffer.pop_front();
        }
    }

    if (t % cfg.update_every() == 0 && use_filter) {
        lifecycle_update(s.bank, t);
        enforce_budget(s.bank);
        SelectionReport rep = select_parts(stack, box_to_crop(s.box, crop.map), s.bank, t, s.rng);
        assign_ids(s.bank, rep.accepted);
        for (FilterPart& p : rep.accepted) s.bank.parts.push_back(std::move(p));
        enforce_budget(s.bank);
        d.parts_updated = true;
    }
    if (net_learns && t == n_boot) {
        train_on(s, s.archive);
        d.net_trained = true;
    } else if (net_learns && t > n_boot && t % cfg.update_every() == 0 && cfg.net_update != NetUpdate::None &&
               !s.hcf_buffer.empty()) {
        std::vector<Sample> set(s.hcf_buffer.begin(), s.hcf_buffer.end());
        set.insert(set.end(), s.archive.begin(), s.archive.end());
        train_on(s, set);
        d.net_trained = true;
    }

    d.candidates = s.bank.count(PartState::Candidate);
    d.reliable = s.bank.count(PartState::Reliable);
    d.gold = s.bank.count(PartState::Gold);
    if (keep_maps) {
        d.filter_map = std::move(fmap);
        d.net_map = std::move(cmap);
        d.fused_map = std::move(fused);
    }
    return d;
}

namespace {
constexpr std::uint32_t kSnapshotVersion = 1;
}

void write_snapshot(std::ostream& out, const TrackerState& s) {
    binio::put_magic(out, "CTST");
    binio::put_u32(out, kSnapshotVersion);
    const std::string text = format_config(s.cfg);
    binio::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    binio::put_i32(out, s.frame);
    for (double v : {s.center.x, s.center.y, s.box.x, s.box.y, s.box.w, s.box.h}) binio::put_f64(out, v);
    binio::put_u32(out, static_cast<std::uint32_t>(s.bank.parts.size()));
    for (const FilterPart& p : s.bank.parts) {
        binio::put_u32(out, static_cast<std::uint32_t>(p.id));
        binio::put_u32(out, static_cast<std::uint32_t>(p.state));
        for (int v : {p.birth_frame, p.votes_cast, p.votes_agreeing, p.geometry.cx, p.geometry.cy, p.geometry.side,
                      p.geometry.scale_index})
            binio::put_i32(out, v);
        binio::put_f64(out, p.geometry.dx);
        binio::put_f64(out, p.geometry.dy);
        binio::put_u32(out, static_cast<std::uint32_t>(p.classifier.size()));
        for (Eigen::Index i = 0; i < p.classifier.size(); ++i) binio::put_f64(out, p.classifier[i]);
    }
    convnet::write_weights(out, s.net);
    if (!out) throw InvalidInput("snapshot: write failed");
}

SnapshotInfo read_snapshot(std::istream& in) {
    binio::expect_magic(in, "CTST");
    if (binio::get_u32(in) != kSnapshotVersion) throw InvalidInput("snapshot: unsupported version");
    SnapshotInfo info;
    const std::uint32_t len = binio::get_u32(in);
    if (len > (1u << 20)) throw InvalidInput("snapshot: config block too large");
    info.config_text.resize(len);
    in.read(info.config_text.data(), len);
    info.frame = binio::get_i32(in);
    info.center = {binio::get_f64(in), binio::get_f64(in)};
    info.box.x = binio::get_f64(in);
    info.box.y = binio::get_f64(in);
    info.box.w = binio::get_f64(in);
    info.box.h = binio::get_f64(in);
    const std::uint32_t count = binio::get_u32(in);
    for (std::uint32_t k = 0; k < count; ++k) {
        FilterPart p;
        p.id = binio::get_u32(in);
        const std::uint32_t state = binio::get_u32(in);
        if (state > 2) throw InvalidInput("snapshot: bad part state");
        p.state = static_cast<PartState>(state);
        p.birth_frame = binio::get_i32(in);
        p.votes_cast = binio::get_i32(in);
        p.votes_agreeing = binio::get_i32(in);
        p.geometry.cx = binio::get_i32(in);
        p.geometry.cy = binio::get_i32(in);
        p.geometry.side = binio::get_i32(in);
        p.geometry.scale_index = binio::get_i32(in);
        p.geometry.dx = binio::get_f64(in);
        p.geometry.dy = binio::get_f64(in);
        const std::uint32_t n = binio::get_u32(in);
        if (n > (1u << 24)) throw InvalidInput("snapshot: classifier too long");
        p.classifier.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) p.classifier[i] = binio::get_f64(in);
        info.parts.push_back(std::move(p));
    }
    info.net = convnet::read_weights(in);
    return info;
}

void save_snapshot(const std::filesystem::path& path, const TrackerState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_snapshot(out, state);
}

}  // namespace cotrack
