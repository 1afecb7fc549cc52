#include "bridgegen/ballsim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bridgegen {
namespace ballsim {

Vec Scenario::flatten() const {
    BallLayout layout{n_balls, n_steps};
    Vec x(layout.dim());
    for (int t = 0; t < n_steps; ++t) {
        for (int b = 0; b < n_balls; ++b) {
            const BallState& s = at(t, b);
            x[layout.idx(t, b, 0)] = s.px;
            x[layout.idx(t, b, 1)] = s.py;
            x[layout.idx(t, b, 2)] = s.vx;
            x[layout.idx(t, b, 3)] = s.vy;
        }
    }
    return x;
}

Scenario Scenario::unflatten(const Vec& x, int B, int T, double r, double L) {
    BallLayout layout{B, T};
    check(x.size() == layout.dim(), "unflatten: state does not match scenario layout");
    Scenario sc;
    sc.n_balls = B;
    sc.n_steps = T;
    sc.radius = r;
    sc.box_halfwidth = L;
    sc.states.resize(static_cast<size_t>(B * T));
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < B; ++b) {
            BallState& s = sc.at(t, b);
            s.px = x[layout.idx(t, b, 0)];
            s.py = x[layout.idx(t, b, 1)];
            s.vx = x[layout.idx(t, b, 2)];
            s.vy = x[layout.idx(t, b, 3)];
        }
    }
    return sc;
}

bool feasible(const std::vector<BallState>& state, double r, double L, double eps) {
    double lim = L - r;
    for (size_t i = 0; i < state.size(); ++i) {
        if (std::abs(state[i].px) > lim + eps || std::abs(state[i].py) > lim + eps) return false;
        for (size_t j = i + 1; j < state.size(); ++j) {
            double dx = state[i].px - state[j].px;
            double dy = state[i].py - state[j].py;
            if (std::sqrt(dx * dx + dy * dy) < 2.0 * r - eps) return false;
        }
    }
    return true;
}

std::vector<BallState> simulate_step(const std::vector<BallState>& state, double r, double L,
                                     StepInfo* info, int k_max) {
    std::vector<BallState> next = state;
    for (auto& b : next) {
        b.px += b.vx;
        b.py += b.vy;
    }
    const double lim = L - r;
    const double contact = 2.0 * r;
    int passes = 0;
    for (; passes < k_max; ++passes) {
        bool any = false;
        // Walls: reflect normal velocity, clamp position to contact.
        for (auto& b : next) {
            if (b.px > lim) {
                b.px = lim;
                if (b.vx > 0.0) b.vx = -b.vx;
                if (info) ++info->wall_events;
                any = true;
            } else if (b.px < -lim) {
                b.px = -lim;
                if (b.vx < 0.0) b.vx = -b.vx;
                if (info) ++info->wall_events;
                any = true;
            }
            if (b.py > lim) {
                b.py = lim;
                if (b.vy > 0.0) b.vy = -b.vy;
                if (info) ++info->wall_events;
                any = true;
            } else if (b.py < -lim) {
                b.py = -lim;
                if (b.vy < 0.0) b.vy = -b.vy;
                if (info) ++info->wall_events;
                any = true;
            }
        }
        // Pairs: equal-mass elastic exchange along the line of centers when
        // approaching; separate positions to exact contact. Wall-touching
        // balls separate along wall-masked directions, each weighted by how
        // much its free direction contributes to the separation, so squeezes
        // against walls resolve within the pass budget.
        auto masked_dir = [&](const BallState& b, double dirx, double diry) {
            std::pair<double, double> d{dirx, diry};
            if ((dirx > 0.0 && b.px >= lim - 1e-12) || (dirx < 0.0 && b.px <= -lim + 1e-12))
                d.first = 0.0;
            if ((diry > 0.0 && b.py >= lim - 1e-12) || (diry < 0.0 && b.py <= -lim + 1e-12))
                d.second = 0.0;
            return d;
        };
        auto freedom = [&](const BallState& b, double dirx, double diry, double want) {
            double f = want;
            if (dirx > 1e-15) f = std::min(f, (lim - b.px) / dirx);
            else if (dirx < -1e-15) f = std::min(f, (-lim - b.px) / dirx);
            if (diry > 1e-15) f = std::min(f, (lim - b.py) / diry);
            else if (diry < -1e-15) f = std::min(f, (-lim - b.py) / diry);
            return std::max(0.0, f);
        };
        // Chains of contacts need repeated sweeps: Gauss-Seidel over pairs
        // until no pair moves (interior chains converge in a few sweeps).
        for (int sweep = 0; sweep < 64; ++sweep) {
            bool moved = false;
            for (size_t i = 0; i < next.size(); ++i) {
                for (size_t j = i + 1; j < next.size(); ++j) {
                    double dx = next[i].px - next[j].px;
                    double dy = next[i].py - next[j].py;
                    double d = std::sqrt(dx * dx + dy * dy);
                    if (d >= contact) continue;
                    any = true;
                    double ux, uy;
                    if (d > 1e-12) {
                        ux = dx / d;
                        uy = dy / d;
                    } else {
                        ux = 1.0;  // coincident centers: separate along x
                        uy = 0.0;
                    }
                    double rel =
                        (next[i].vx - next[j].vx) * ux + (next[i].vy - next[j].vy) * uy;
                    if (rel < 0.0) {
                        next[i].vx -= rel * ux;
                        next[i].vy -= rel * uy;
                        next[j].vx += rel * ux;
                        next[j].vy += rel * uy;
                        if (info) ++info->pair_events;
                    }
                    double need = contact - d;
                    auto [dix, diy] = masked_dir(next[i], ux, uy);
                    auto [djx, djy] = masked_dir(next[j], -ux, -uy);
                    double gi = dix * ux + diy * uy;     // separation per unit move of i
                    double gj = -(djx * ux + djy * uy);  // and of j (moves along -u side)
                    double denom = gi * gi + gj * gj;
                    if (denom < 1e-18) continue;  // both fully pinned; walls go first next pass
                    double ai = need * gi / denom;
                    double aj = need * gj / denom;
                    ai = std::min(ai, freedom(next[i], dix, diy, 1e9));
                    aj = std::min(aj, freedom(next[j], djx, djy, 1e9));
                    if (ai == 0.0 && aj == 0.0) continue;
                    moved = true;
                    next[i].px += ai * dix;
                    next[i].py += ai * diy;
                    next[j].px += aj * djx;
                    next[j].py += aj * djy;
                }
            }
            if (!moved) break;
        }
        if (!any) break;
    }
    if (info) info->passes = passes;
    check(feasible(next, r, L, 1e-6 * L), "contact resolution failed");
    return next;
}

std::vector<BallState> random_init(int B, double r, double L, double vel_max, Rng& rng) {
    double lim = L - r;
    std::vector<BallState> state;
    state.reserve(static_cast<size_t>(B));
    int rejections = 0;
    while (static_cast<int>(state.size()) < B) {
        BallState b;
        b.px = rng.uniform(-lim, lim);
        b.py = rng.uniform(-lim, lim);
        b.vx = rng.uniform(-vel_max, vel_max);
        b.vy = rng.uniform(-vel_max, vel_max);
        bool ok = true;
        for (const auto& other : state) {
            double dx = b.px - other.px, dy = b.py - other.py;
            if (std::sqrt(dx * dx + dy * dy) < 2.0 * r) {
                ok = false;
                break;
            }
        }
        if (ok) {
            state.push_back(b);
        } else if (++rejections > 10000) {
            throw Error("initialization infeasible");
        }
    }
    return state;
}

Scenario simulate_scenario(const std::vector<BallState>& init, int T, double r, double L) {
    check(T >= 1, "simulate_scenario: need at least one step");
    Scenario sc;
    sc.n_balls = static_cast<int>(init.size());
    sc.n_steps = T;
    sc.radius = r;
    sc.box_halfwidth = L;
    sc.states.reserve(static_cast<size_t>(sc.n_balls * T));
    std::vector<BallState> cur = init;
    for (int t = 0; t < T; ++t) {
        if (t > 0) cur = simulate_step(cur, r, L);
        sc.states.insert(sc.states.end(), cur.begin(), cur.end());
    }
    return sc;
}

std::vector<Scenario> generate_dataset(const GenParams& p, std::uint64_t seed) {
    std::vector<Scenario> out;
    out.reserve(static_cast<size_t>(p.n_scenarios));
    for (int k = 0; k < p.n_scenarios; ++k) {
        Rng rng(derive_seed(seed, "scenario", static_cast<std::uint64_t>(k)));
        auto init = random_init(p.n_balls, p.radius, p.box_halfwidth, p.vel_max, rng);
        out.push_back(simulate_scenario(init, p.n_steps, p.radius, p.box_halfwidth));
    }
    return out;
}

void write_dataset_csv(const std::string& path, const std::vector<Scenario>& scenarios) {
    std::ofstream os(path, std::ios::trunc);
    check(static_cast<bool>(os), "cannot open for writing: " + path);
    os << "scenario_id,timestep,ball_id,px,py,vx,vy\n";
    for (size_t k = 0; k < scenarios.size(); ++k) {
        const Scenario& sc = scenarios[k];
        for (int t = 0; t < sc.n_steps; ++t) {
            for (int b = 0; b < sc.n_balls; ++b) {
                const BallState& s = sc.at(t, b);
                os << k << ',' << t << ',' << b << ',' << format_double(s.px) << ','
                   << format_double(s.py) << ',' << format_double(s.vx) << ','
                   << format_double(s.vy) << '\n';
            }
        }
    }
    check(static_cast<bool>(os), "write failed: " + path);
}

std::vector<Scenario> read_dataset_csv(const std::string& path, double r, double L) {
    std::ifstream is(path);
    check(static_cast<bool>(is), "cannot open: " + path);
    std::string line;
    check(static_cast<bool>(std::getline(is, line)), "dataset csv: missing header");
    check(line.rfind("scenario_id,", 0) == 0, "dataset csv: unexpected header");
    struct Row {
        int k, t, b;
        BallState s;
    };
    std::vector<Row> rows;
    int max_k = -1, max_t = -1, max_b = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        auto next_field = [&]() {
            check(static_cast<bool>(std::getline(ss, field, ',')), "dataset csv: malformed row");
            return field;
        };
        Row row;
        row.k = std::stoi(next_field());
        row.t = std::stoi(next_field());
        row.b = std::stoi(next_field());
        row.s.px = std::strtod(next_field().c_str(), nullptr);
        row.s.py = std::strtod(next_field().c_str(), nullptr);
        row.s.vx = std::strtod(next_field().c_str(), nullptr);
        row.s.vy = std::strtod(next_field().c_str(), nullptr);
        max_k = std::max(max_k, row.k);
        max_t = std::max(max_t, row.t);
        max_b = std::max(max_b, row.b);
        rows.push_back(row);
    }
    check(max_k >= 0, "dataset csv: no data rows");
    int B = max_b + 1, T = max_t + 1;
    check(rows.size() == static_cast<size_t>((max_k + 1) * B * T), "dataset csv: incomplete scenario");
    std::vector<Scenario> out(static_cast<size_t>(max_k + 1));
    for (auto& sc : out) {
        sc.n_balls = B;
        sc.n_steps = T;
        sc.radius = r;
        sc.box_halfwidth = L;
        sc.states.resize(static_cast<size_t>(B * T));
    }
    for (const auto& row : rows) out[static_cast<size_t>(row.k)].at(row.t, row.b) = row.s;
    return out;
}

Mat dataset_matrix(const std::vector<Scenario>& scenarios) {
    check(!scenarios.empty(), "dataset_matrix: empty dataset");
    Vec first = scenarios[0].flatten();
    Mat out(first.size(), static_cast<Eigen::Index>(scenarios.size()));
    out.col(0) = first;
    for (size_t k = 1; k < scenarios.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = scenarios[k].flatten();
    return out;
}

}  // namespace ballsim
}  // namespace bridgegen
