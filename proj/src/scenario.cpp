#include "compop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "compop/error.hpp"

namespace compop {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamPlacement = 20;
constexpr std::uint64_t kStreamJitter = 21;

void only_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw Error(ErrorKind::Parse, std::string(where) + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) throw Error(ErrorKind::Parse, "unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null())
        out.reset();
    else
        out = j.at(key).get<T>();
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

ReflectionSurface SurfaceConfig::surface() const {
    if (slope) return ReflectionSurface::from_slope(*slope, intercept_m);
    if (x_const_m) return ReflectionSurface::vertical(*x_const_m);
    throw Error(ErrorKind::InvalidConfig, "surface needs either a slope or x_const_m");
}

SignatureConfig WaveformConfig::signature() const {
    SignatureConfig sig = SignatureConfig::below_band(grid());
    if (f_a_hz) sig.f_a = *f_a_hz;
    if (f_b_hz) sig.f_b = *f_b_hz;
    return sig;
}

NoiseModel ScenarioConfig::noise_model(std::uint64_t seed) const {
    NoiseModel n;
    n.phase_sigma = noise.phase_sigma_rad;
    n.snr_db = noise.snr_db;
    n.seed = seed;
    if (noise.snr_reference == "per_transmitter")
        n.reference = SnrReference::PerTransmitter;
    else if (noise.snr_reference == "received")
        n.reference = SnrReference::Received;
    else
        throw Error(ErrorKind::InvalidConfig, "snr_reference must be per_transmitter or received");
    return n;
}

ScenarioConfig reference_nlos_config() {
    ScenarioConfig c;
    c.tv.antenna_count = 200;
    c.sv.rows = 10;
    c.sv.cols = 20;
    c.surfaces = {
        {1.02, 3.0, std::nullopt, 1.0, 0.0},
        {0.25, 3.25, std::nullopt, 1.0, 0.0},
        {3.0, 4.0, std::nullopt, 1.0, 0.0},
    };
    c.sigma_s = 7.0e-9;
    c.has_los = false;
    c.sweep.distances_m = {4.0, 8.0, 12.0};
    c.sweep.surface_counts = {3};
    c.sweep.sv_antenna_counts = {200};
    return c;
}

ScenarioConfig reference_los_config() {
    ScenarioConfig c = reference_nlos_config();
    c.tv.center_m = {0.0, 0.0, 8.0};
    c.surfaces.clear();
    c.has_los = true;
    return c;
}

std::string to_json(const ScenarioConfig& c) {
    json j;
    j["tv"] = {{"size_m", c.tv.size_m},
               {"antenna_count", c.tv.antenna_count},
               {"center_m", c.tv.center_m},
               {"yaw_rad", c.tv.yaw_rad}};
    j["sv"] = {{"aperture_m", c.sv.aperture_m},
               {"rows", c.sv.rows},
               {"cols", c.sv.cols},
               {"jitter_fraction", c.sv.jitter_fraction}};
    j["surfaces"] = json::array();
    for (const auto& s : c.surfaces)
        j["surfaces"].push_back({{"slope", opt(s.slope)},
                                 {"intercept_m", s.intercept_m},
                                 {"x_const_m", opt(s.x_const_m)},
                                 {"gamma_abs", s.gamma_abs},
                                 {"gamma_arg_rad", s.gamma_arg_rad}});
    j["sigma_s"] = c.sigma_s;
    j["has_los"] = c.has_los;
    j["waveform"] = {{"f1_hz", c.waveform.f1_hz},
                     {"tone_count", c.waveform.tone_count},
                     {"delta_hz", c.waveform.delta_hz},
                     {"f_a_hz", opt(c.waveform.f_a_hz)},
                     {"f_b_hz", opt(c.waveform.f_b_hz)}};
    j["noise"] = {{"snr_db", opt(c.noise.snr_db)},
                  {"phase_sigma_rad", c.noise.phase_sigma_rad},
                  {"snr_reference", c.noise.snr_reference},
                  {"seed", c.noise.seed}};
    j["pipeline"] = {{"nu", c.pipeline.nu},
                     {"box_extent_m", c.pipeline.box_extent_m},
                     {"voxel_pitch_m", opt(c.pipeline.voxel_pitch_m)},
                     {"theta_step_rad", c.pipeline.theta_step_rad},
                     {"clock_tolerance_s", opt(c.pipeline.clock_tolerance_s)},
                     {"merge_radius_m", opt(c.pipeline.merge_radius_m)},
                     {"aperture_spacing_m", c.pipeline.aperture_spacing_m}};
    j["sweep"] = {{"distances_m", c.sweep.distances_m},
                  {"surface_counts", c.sweep.surface_counts},
                  {"sv_antenna_counts", c.sweep.sv_antenna_counts},
                  {"trials", c.sweep.trials}};
    j["workers"] = c.workers;
    return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
    ScenarioConfig c;
    try {
        const json j = json::parse(text);
        only_keys(j, "config",
                  {"tv", "sv", "surfaces", "sigma_s", "has_los", "waveform", "noise", "pipeline", "sweep", "workers"});
        if (j.contains("tv")) {
            const json& t = j.at("tv");
            only_keys(t, "tv", {"size_m", "antenna_count", "center_m", "yaw_rad"});
            read(t, "size_m", c.tv.size_m);
            read(t, "antenna_count", c.tv.antenna_count);
            read(t, "center_m", c.tv.center_m);
            read(t, "yaw_rad", c.tv.yaw_rad);
        }
        if (j.contains("sv")) {
            const json& s = j.at("sv");
            only_keys(s, "sv", {"aperture_m", "rows", "cols", "jitter_fraction"});
            read(s, "aperture_m", c.sv.aperture_m);
            read(s, "rows", c.sv.rows);
            read(s, "cols", c.sv.cols);
            read(s, "jitter_fraction", c.sv.jitter_fraction);
        }
        if (j.contains("surfaces")) {
            for (const json& s : j.at("surfaces")) {
                only_keys(s, "surface", {"slope", "intercept_m", "x_const_m", "gamma_abs", "gamma_arg_rad"});
                SurfaceConfig sc;
                read(s, "slope", sc.slope);
                read(s, "intercept_m", sc.intercept_m);
                read(s, "x_const_m", sc.x_const_m);
                read(s, "gamma_abs", sc.gamma_abs);
                read(s, "gamma_arg_rad", sc.gamma_arg_rad);
                c.surfaces.push_back(sc);
            }
        }
        read(j, "sigma_s", c.sigma_s);
        read(j, "has_los", c.has_los);
        if (j.contains("waveform")) {
            const json& w = j.at("waveform");
            only_keys(w, "waveform", {"f1_hz", "tone_count", "delta_hz", "f_a_hz", "f_b_hz"});
            read(w, "f1_hz", c.waveform.f1_hz);
            read(w, "tone_count", c.waveform.tone_count);
            read(w, "delta_hz", c.waveform.delta_hz);
            read(w, "f_a_hz", c.waveform.f_a_hz);
            read(w, "f_b_hz", c.waveform.f_b_hz);
        }
        if (j.contains("noise")) {
            const json& n = j.at("noise");
            only_keys(n, "noise", {"snr_db", "phase_sigma_rad", "snr_reference", "seed"});
            read(n, "snr_db", c.noise.snr_db);
            read(n, "phase_sigma_rad", c.noise.phase_sigma_rad);
            read(n, "snr_reference", c.noise.snr_reference);
            read(n, "seed", c.noise.seed);
        }
        if (j.contains("pipeline")) {
            const json& p = j.at("pipeline");
            only_keys(p, "pipeline",
                      {"nu", "box_extent_m", "voxel_pitch_m", "theta_step_rad", "clock_tolerance_s", "merge_radius_m",
                       "aperture_spacing_m"});
            read(p, "nu", c.pipeline.nu);
            read(p, "box_extent_m", c.pipeline.box_extent_m);
            read(p, "voxel_pitch_m", c.pipeline.voxel_pitch_m);
            read(p, "theta_step_rad", c.pipeline.theta_step_rad);
            read(p, "clock_tolerance_s", c.pipeline.clock_tolerance_s);
            read(p, "merge_radius_m", c.pipeline.merge_radius_m);
            read(p, "aperture_spacing_m", c.pipeline.aperture_spacing_m);
        }
        if (j.contains("sweep")) {
            const json& s = j.at("sweep");
            only_keys(s, "sweep", {"distances_m", "surface_counts", "sv_antenna_counts", "trials"});
            read(s, "distances_m", c.sweep.distances_m);
            read(s, "surface_counts", c.sweep.surface_counts);
            read(s, "sv_antenna_counts", c.sweep.sv_antenna_counts);
            read(s, "trials", c.sweep.trials);
        }
        read(j, "workers", c.workers);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

std::string config_hash(const ScenarioConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : json::parse(to_json(config)).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

PointCloud place_body_antennas(const std::array<double, 3>& size, int count, std::uint64_t seed) {
    if (count < 2) throw Error(ErrorKind::InvalidConfig, "the TV needs at least two antennas");
    const double lx = size[0], ly = size[1], lz = size[2];
    if (!(lx > 0.0 && ly > 0.0 && lz > 0.0)) throw Error(ErrorKind::InvalidConfig, "TV body size must be positive");
    PointCloud out{{-0.5 * lx, 0.0, 0.0}, {0.5 * lx, 0.0, 0.0}};

    struct Face {
        int axis;     // fixed coordinate
        double sign;  // which side
        double area;
    };
    const Face faces[6] = {{0, -1, ly * lz}, {0, 1, ly * lz}, {1, -1, lx * lz},
                           {1, 1, lx * lz},  {2, -1, lx * ly}, {2, 1, lx * ly}};
    const int rest = count - 2;
    double total = 0.0;
    for (const auto& f : faces) total += f.area;
    int alloc[6];
    double remainder[6];
    int used = 0;
    for (int i = 0; i < 6; ++i) {
        const double exact = rest * faces[i].area / total;
        alloc[i] = static_cast<int>(std::floor(exact));
        remainder[i] = exact - alloc[i];
        used += alloc[i];
    }
    while (used < rest) {
        int best = 0;
        for (int i = 1; i < 6; ++i)
            if (remainder[i] > remainder[best]) best = i;
        ++alloc[best];
        remainder[best] = -1.0;
        ++used;
    }

    std::mt19937_64 rng(stream_seed(seed, kStreamPlacement, 0, 0));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    const double half[3] = {0.5 * lx, 0.5 * ly, 0.5 * lz};
    for (int fi = 0; fi < 6; ++fi) {
        const Face& f = faces[fi];
        const int n = alloc[fi];
        const double s1 = uni(rng), s2 = uni(rng);
        const int ua = (f.axis + 1) % 3, va = (f.axis + 2) % 3;
        for (int i = 0; i < n; ++i) {
            double u = (i + 0.5) / n + s1;
            double v = i * golden + s2;
            u -= std::floor(u);
            v -= std::floor(v);
            double c[3];
            c[f.axis] = f.sign * half[f.axis];
            c[ua] = (u - 0.5) * 2.0 * half[ua];
            c[va] = (v - 0.5) * 2.0 * half[va];
            out.push_back({c[0], c[1], c[2]});
        }
    }
    return out;
}

PointCloud sv_grid(const SvConfig& sv, std::uint64_t seed) {
    if (sv.rows < 1 || sv.cols < 1) throw Error(ErrorKind::InvalidConfig, "SV grid needs at least one row and column");
    const double ax = sv.aperture_m[0], ay = sv.aperture_m[1];
    const double px = sv.cols > 1 ? ax / (sv.cols - 1) : 0.0;
    const double py = sv.rows > 1 ? ay / (sv.rows - 1) : 0.0;
    std::mt19937_64 rng(stream_seed(seed, kStreamJitter, 0, 0));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    PointCloud out;
    for (int r = 0; r < sv.rows; ++r)
        for (int c = 0; c < sv.cols; ++c) {
            Point3 p{-0.5 * ax + c * px, -0.5 * ay + r * py, 0.0};
            if (sv.jitter_fraction > 0.0) {
                p.x += sv.jitter_fraction * px * uni(rng);
                p.y += sv.jitter_fraction * py * uni(rng);
            }
            out.push_back(p);
        }
    return out;
}

Scene build_scene(const ScenarioConfig& config, std::uint64_t seed) {
    Scene scene;
    const Point3 center{config.tv.center_m[0], config.tv.center_m[1], config.tv.center_m[2]};
    for (const auto& p : place_body_antennas(config.tv.size_m, config.tv.antenna_count, seed))
        scene.tv_antennas.push_back(rotate_about_y(p, config.tv.yaw_rad) + center);
    scene.sv_antennas = sv_grid(config.sv, seed);
    for (const auto& s : config.surfaces)
        scene.reflectors.push_back({s.surface(), std::polar(s.gamma_abs, s.gamma_arg_rad)});
    scene.clock_offset = config.sigma_s;
    scene.has_los = config.has_los;
    scene.check();
    return scene;
}

}  // namespace compop
