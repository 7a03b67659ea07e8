#include "cotrack/filterparts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "cotrack/error.hpp"
#include "cotrack/linalg.hpp"

namespace cotrack {

const char* to_string(PartState s) {
    switch (s) {
        case PartState::Candidate: return "candidate";
        case PartState::Reliable: return "reliable";
        case PartState::Gold: return "gold";
    }
    return "?";
}

int PartBank::count(PartState s) const {
    return static_cast<int>(std::count_if(parts.begin(), parts.end(), [s](const FilterPart& p) { return p.state == s; }));
}

int PartBank::count(PartState s, int scale_index) const {
    return static_cast<int>(std::count_if(parts.begin(), parts.end(), [&](const FilterPart& p) {
        return p.state == s && p.geometry.scale_index == scale_index;
    }));
}

Eigen::MatrixXd learn_bank(const std::vector<Eigen::VectorXd>& positives,
                           const std::vector<Eigen::VectorXd>& negatives, double lambda) {
    if (positives.empty() || negatives.empty())
        throw InvalidInput("learn_bank: need at least one positive and one negative");
    const Eigen::Index k = positives.front().size();
    const auto n = static_cast<Eigen::Index>(positives.size() + negatives.size());
    Eigen::MatrixXd data(n, k);
    Eigen::Index row = 0;
    for (const auto* set : {&positives, &negatives}) {
        for (const Eigen::VectorXd& d : *set) {
            if (d.size() != k) throw InvalidInput("learn_bank: descriptor length mismatch");
            data.row(row++) = d.transpose();
        }
    }
    // Collinear with the balanced (weighted) solution, so only the direction is kept.
    Eigen::MatrixXd bank = linalg::ridge(data, lambda).leftCols(static_cast<Eigen::Index>(positives.size()));
    for (Eigen::Index j = 0; j < bank.cols(); ++j) {
        const double norm = bank.col(j).norm();
        if (norm > 0.0) bank.col(j) /= norm;
    }
    return bank;
}

bool is_discriminative(double own, double max_negative, double t_d) {
    if (!(own > 0.0)) return false;
    if (max_negative <= 0.0) return true;
    return own / max_negative > t_d;
}

std::vector<PatchGeometry> pick_negatives(const FeatureStack& stack, const Box& box, int side, int scale_index,
                                          const PartBankConfig& cfg, std::mt19937_64& rng) {
    struct Scored {
        PatchGeometry g;
        double density;
    };
    std::vector<Scored> pool;
    const int stride = std::max(cfg.stride, 1);
    for (int top = 0; top + side <= stack.height; top += stride) {
        for (int left = 0; left + side <= stack.width; left += stride) {
            const bool outside = left + side <= box.x || left >= box.x + box.w || top + side <= box.y ||
                                 top >= box.y + box.h;
            if (!outside) continue;
            PatchGeometry g;
            g.side = side;
            g.scale_index = scale_index;
            g.cx = left + side / 2;
            g.cy = top + side / 2;
            pool.push_back({g, edge_density(stack, g)});
        }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) { return a.density > b.density; });

    std::vector<PatchGeometry> out;
    std::size_t hard = 0;
    while (hard < pool.size() && static_cast<int>(hard) < cfg.n_hard_negatives && pool[hard].density > 1e-12) {
        out.push_back(pool[hard].g);
        ++hard;
    }
    std::vector<std::size_t> rest(pool.size() - hard);
    std::iota(rest.begin(), rest.end(), hard);
    const std::size_t wanted =
        static_cast<std::size_t>(cfg.n_random_negatives + cfg.n_hard_negatives) - out.size();
    for (std::size_t i = 0; i < rest.size() && i < wanted; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, rest.size() - 1);
        std::swap(rest[i], rest[pick(rng)]);
        out.push_back(pool[rest[i]].g);
    }
    return out;
}

SelectionReport select_parts(const FeatureStack& stack, const Box& box, const PartBank& bank, int frame,
                             std::mt19937_64& rng) {
    const PartBankConfig& cfg = bank.cfg;
    SelectionReport report;
    const auto scales = bank.scales[0] > 0 ? bank.scales : default_scales(box.w, box.h);
    const std::vector<PatchGeometry> proposals = propose_patches(box, cfg.stride, scales, stack.width, stack.height);
    if (proposals.empty()) return report;

    // group proposals by grid point; each point holds its geometries smallest first
    std::map<std::pair<int, int>, std::vector<PatchGeometry>> points;
    for (const PatchGeometry& g : proposals) points[{g.cy, g.cx}].push_back(g);

    const double half = 0.5 * cfg.stride;
    std::map<std::pair<int, int>, bool> covered;
    for (const auto& [key, geoms] : points) {
        bool taken = false;
        if (!cfg.single_role) {
            const PatchGeometry& g = geoms.front();
            for (const FilterPart& p : bank.parts) {
                if (std::abs(p.geometry.dx - g.dx) < half && std::abs(p.geometry.dy - g.dy) < half) {
                    taken = true;
                    break;
                }
            }
        }
        covered[key] = taken;
    }

    for (int si = 0; si < 3; ++si) {
        std::vector<PatchGeometry> candidates;
        for (const auto& [key, geoms] : points) {
            if (covered[key]) continue;
            for (const PatchGeometry& g : geoms)
                if (g.scale_index == si) candidates.push_back(g);
        }
        if (candidates.empty()) continue;
        const std::vector<PatchGeometry> neg_geoms = pick_negatives(stack, box, scales[si], si, cfg, rng);
        if (neg_geoms.empty()) continue;

        std::vector<Eigen::VectorXd> positives;
        std::vector<Eigen::VectorXd> negatives;
        positives.reserve(candidates.size());
        for (const PatchGeometry& g : candidates) positives.push_back(vectorize_patch(stack, g));
        for (const PatchGeometry& g : neg_geoms) negatives.push_back(vectorize_patch(stack, g));

        const Eigen::MatrixXd classifiers = learn_bank(positives, negatives, cfg.lambda);
        Eigen::MatrixXd neg_matrix(static_cast<Eigen::Index>(negatives.size()), classifiers.rows());
        for (std::size_t i = 0; i < negatives.size(); ++i)
            neg_matrix.row(static_cast<Eigen::Index>(i)) = negatives[i].transpose();
        const Eigen::MatrixXd neg_resp = neg_matrix * classifiers;

        for (std::size_t j = 0; j < candidates.size(); ++j) {
            const auto col = static_cast<Eigen::Index>(j);
            const double own = classifiers.col(col).dot(positives[j]);
            const double max_neg = neg_resp.col(col).maxCoeff();
            const double ratio = max_neg > 0.0 ? own / max_neg : (own > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            ++report.evaluated;

            FilterPart part;
            part.classifier = classifiers.col(col);
            part.geometry = candidates[j];
            part.state = PartState::Candidate;
            part.birth_frame = frame;
            if (!report.best || ratio > report.best_ratio) {
                report.best = part;
                report.best_ratio = ratio;
            }
            if (is_discriminative(own, max_neg, cfg.t_d)) {
                covered[{candidates[j].cy, candidates[j].cx}] = true;
                report.accepted.push_back(std::move(part));
            }
        }
    }
    return report;
}

namespace {

void require_fits(const FilterPart& part, const FeatureStack& stack) {
    const int side = part.geometry.side;
    if (side <= 0 || side > stack.width || side > stack.height)
        throw InvalidInput("response_map: part larger than the feature stack");
    if (part.classifier.size() != static_cast<Eigen::Index>(side) * side * stack.depth)
        throw InvalidInput("response_map: classifier length does not match the stack depth");
}

// Scatters window responses (row order of patch_matrix) into a center-vote map.
void scatter_votes(const Eigen::Ref<const Eigen::VectorXd>& resp, const Eigen::VectorXd& norms,
                   const FilterPart& part, const FeatureStack& stack, VoteMap& map) {
    const int side = part.geometry.side;
    const int nx = stack.width - side + 1;
    const int ny = stack.height - side + 1;
    for (int v = 0; v < ny; ++v) {
        for (int u = 0; u < nx; ++u) {
            const Eigen::Index i = static_cast<Eigen::Index>(v) * nx + u;
            if (norms[i] <= 0.0) continue;
            const double r = resp[i] / norms[i];
            if (r <= 0.0) continue;
            const int x = static_cast<int>(std::lround(u + side / 2 - part.geometry.dx));
            const int y = static_cast<int>(std::lround(v + side / 2 - part.geometry.dy));
            if (map.contains(x, y)) map.at(x, y) = r;
        }
    }
}

}  // namespace

VoteMap response_map(const FilterPart& part, const FeatureStack& stack) {
    require_fits(part, stack);
    VoteMap map(stack.width, stack.height, MapKind::FilterParts);
    const RowMatrixXd windows = patch_matrix(stack, part.geometry.side);
    const Eigen::VectorXd resp = windows * part.classifier;
    scatter_votes(resp, patch_norms(stack, part.geometry.side), part, stack, map);
    return map;
}

PartResponses respond_all(const PartBank& bank, const FeatureStack& stack) {
    PartResponses out;
    out.maps.assign(bank.parts.size(), VoteMap(stack.width, stack.height, MapKind::FilterParts));
    out.peaks.assign(bank.parts.size(), std::nullopt);

    std::map<int, std::vector<std::size_t>> by_side;
    for (std::size_t i = 0; i < bank.parts.size(); ++i) {
        require_fits(bank.parts[i], stack);
        by_side[bank.parts[i].geometry.side].push_back(i);
    }
    for (const auto& [side, members] : by_side) {
        const RowMatrixXd windows = patch_matrix(stack, side);
        const Eigen::VectorXd norms = patch_norms(stack, side);
        Eigen::MatrixXd classifiers(windows.cols(), static_cast<Eigen::Index>(members.size()));
        for (std::size_t j = 0; j < members.size(); ++j)
            classifiers.col(static_cast<Eigen::Index>(j)) = bank.parts[members[j]].classifier;
        const Eigen::MatrixXd resp = windows * classifiers;
        for (std::size_t j = 0; j < members.size(); ++j) {
            const std::size_t idx = members[j];
            scatter_votes(resp.col(static_cast<Eigen::Index>(j)), norms, bank.parts[idx], stack, out.maps[idx]);
            const Peak peak = argmax(out.maps[idx]);
            if (peak.value > 0.0) out.peaks[idx] = peak;
        }
    }
    return out;
}

Aggregate aggregate_votes(const PartBank& bank, const PartResponses& responses, double sigma_g) {
    if (responses.maps.size() != bank.parts.size())
        throw InvalidInput("aggregate_votes: responses do not match the bank");
    Aggregate agg;
    if (bank.parts.empty()) return agg;
    agg.map = VoteMap(responses.maps.front().width(), responses.maps.front().height(), MapKind::FilterParts);
    for (std::size_t i = 0; i < bank.parts.size(); ++i) {
        if (!bank.cfg.single_role && !bank.parts[i].votes()) continue;
        agg.map.values += responses.maps[i].values;
        ++agg.voters;
    }
    if (agg.voters == 0) return agg;
    agg.map.values /= agg.voters;
    agg.map = gaussian_smooth(agg.map, sigma_g);
    return agg;
}

Aggregate aggregate_votes(const PartBank& bank, const FeatureStack& stack, double sigma_g) {
    Aggregate agg = aggregate_votes(bank, respond_all(bank, stack), sigma_g);
    if (agg.map.values.size() == 0) agg.map = VoteMap(stack.width, stack.height, MapKind::FilterParts);
    return agg;
}

double agreement_radius(int search_side, double fraction, double min_px) {
    return std::max(min_px, fraction * search_side);
}

void record_cooccurrence(PartBank& bank, const std::vector<std::optional<Peak>>& peaks, const Point& chosen,
                         double radius) {
    if (peaks.size() != bank.parts.size()) throw InvalidInput("record_cooccurrence: peak count mismatch");
    for (std::size_t i = 0; i < bank.parts.size(); ++i) {
        FilterPart& p = bank.parts[i];
        if (p.state == PartState::Gold) continue;
        ++p.votes_cast;
        const auto& pk = peaks[i];
        if (pk && distance({static_cast<double>(pk->x), static_cast<double>(pk->y)}, chosen) <= radius)
            ++p.votes_agreeing;
    }
}

void lifecycle_update(PartBank& bank, int frame) {
    const PartBankConfig& cfg = bank.cfg;
    if (cfg.update_every <= 0 || frame % cfg.update_every != 0)
        throw InvalidInput("lifecycle_update: frame is not on the update cadence");
    std::vector<FilterPart> kept;
    kept.reserve(bank.parts.size());
    for (FilterPart& p : bank.parts) {
        if (p.state != PartState::Gold && !cfg.single_role && p.votes_cast > 0) {
            const double f = p.reliability();
            if (f <= cfg.p_minus) continue;  // removed
            if (f > cfg.p_plus && p.votes_cast >= cfg.min_support)
                p.state = p.state == PartState::Candidate ? PartState::Reliable : PartState::Gold;
        }
        if (p.state != PartState::Gold) {
            p.votes_cast = 0;
            p.votes_agreeing = 0;
        }
        kept.push_back(std::move(p));
    }
    bank.parts = std::move(kept);
}

void enforce_budget(PartBank& bank) {
    const int n_max = bank.cfg.n_max;
    const bool all_vote = bank.cfg.single_role;
    auto older = [](const FilterPart& a, const FilterPart& b) {
        return std::tie(a.birth_frame, a.id) < std::tie(b.birth_frame, b.id);
    };
    for (int scale = 0; scale < 3; ++scale) {
        while (true) {
            std::vector<std::size_t> voters;
            for (std::size_t i = 0; i < bank.parts.size(); ++i) {
                const FilterPart& p = bank.parts[i];
                if (p.geometry.scale_index == scale && (all_vote || p.votes())) voters.push_back(i);
            }
            if (static_cast<int>(voters.size()) <= n_max) break;

            // Drop the younger member of the most similar (older, younger-reliable) pair.
            std::optional<std::size_t> victim;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t b : voters) {
                const FilterPart& young = bank.parts[b];
                if (young.state == PartState::Gold) continue;
                for (std::size_t a : voters) {
                    const FilterPart& old = bank.parts[a];
                    if (a == b || !older(old, young) || old.classifier.size() != young.classifier.size()) continue;
                    const double sim = old.classifier.dot(young.classifier);
                    if (sim > best || (sim == best && victim && older(bank.parts[*victim], young))) {
                        best = sim;
                        victim = b;
                    }
                }
            }
            if (!victim) {
                // no older partner: fall back to the youngest removable part
                for (std::size_t b : voters) {
                    if (bank.parts[b].state == PartState::Gold) continue;
                    if (!victim || older(bank.parts[*victim], bank.parts[b])) victim = b;
                }
            }
            if (!victim) break;  // only gold left at this scale
            bank.parts.erase(bank.parts.begin() + static_cast<std::ptrdiff_t>(*victim));
        }
    }
}

}  // namespace cotrack
