#include "pmcw/radarproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "binio.hpp"
#include "pmcw/fft.hpp"

namespace pmcw {

namespace {

constexpr char kMapMagic[8] = {'P', 'M', 'C', 'W', 'R', 'D', '1', '\0'};

double median_power(const RangeDopplerMap& map) {
    RVector p(map.magnitude.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = map.magnitude[i] * map.magnitude[i];
    if (p.empty()) return 0.0;
    const auto mid = p.begin() + static_cast<long>(p.size() / 2);
    std::nth_element(p.begin(), mid, p.end());
    return *mid;
}

double parabola_offset(double a, double b, double c) {
    const double den = a - 2.0 * b + c;
    if (den >= 0.0) return 0.0;
    return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

double wrap_bin(double x, std::size_t n) {
    const double len = static_cast<double>(n);
    double w = std::fmod(x, len);
    if (w < 0.0) w += len;
    return w;
}

}  // namespace

RVector RangeDopplerMap::range_axis() const {
    RVector a(range_bins);
    for (std::size_t i = 0; i < range_bins; ++i) a[i] = range_of(static_cast<double>(i));
    return a;
}

RVector RangeDopplerMap::velocity_axis() const {
    RVector a(velocity_bins);
    for (std::size_t i = 0; i < velocity_bins; ++i) a[i] = velocity_of(static_cast<double>(i));
    return a;
}

BlockMatrix range_profiles(std::span<const Complex> payload, const FramePlan& plan, const ChipSequence& ref,
                           std::span<const double> symbols) {
    if (symbols.size() != plan.blocks)
        throw ArgumentError("range profiles need one symbol per block (" + std::to_string(plan.blocks) + "), got " +
                            std::to_string(symbols.size()));
    BlockMatrix prof = correlate_blocks(accumulate_blocks(payload, plan), ref);
    for (std::size_t k = 0; k < prof.rows; ++k)
        for (auto& v : prof.row(k)) v *= symbols[k];
    return prof;
}

RangeDopplerMap range_doppler(const BlockMatrix& profiles, const FramePlan& plan, bool hann) {
    if (profiles.rows != plan.blocks || profiles.cols != plan.prbs_length)
        throw ArgumentError("profile matrix does not match the frame plan");
    const std::size_t n = profiles.cols, m = profiles.rows;
    const PerformanceReport perf = derive_parameters(plan);

    RangeDopplerMap map;
    map.range_bins = n;
    map.velocity_bins = m;
    map.magnitude.assign(n * m, 0.0);
    map.range_resolution_m = perf.range_resolution_m;
    map.max_range_m = perf.max_range_m;
    map.velocity_resolution_mps = perf.velocity_resolution_mps;
    map.max_velocity_mps = perf.max_velocity_mps;

    RVector window(m, 1.0);
    if (hann && m > 1)
        for (std::size_t k = 0; k < m; ++k)
            window[k] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(m));

    CVector column(m);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < m; ++k) column[k] = profiles.data[k * n + r] * window[k];
        dft_inplace(column);
        for (std::size_t c = 0; c < m; ++c) {
            const std::size_t src = (c + m - m / 2) % m;
            map.magnitude[r * m + c] = std::abs(column[src]);
        }
    }
    return map;
}

double noise_floor(const RangeDopplerMap& map) { return median_power(map) / std::log(2.0); }

std::vector<Detection> detect(const RangeDopplerMap& map, double threshold_db) {
    std::vector<Detection> out;
    const std::size_t n = map.range_bins, m = map.velocity_bins;
    if (n == 0 || m == 0) return out;
    const double median = median_power(map);
    const double threshold = median * db_to_power(threshold_db);
    auto power = [&](std::size_t r, std::size_t v) { return map.at(r, v) * map.at(r, v); };

    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t v = 0; v < m; ++v) {
            const double p = power(r, v);
            if (p <= threshold) continue;
            bool peak = true;
            for (int dr = -1; dr <= 1 && peak; ++dr)
                for (int dv = -1; dv <= 1 && peak; ++dv) {
                    if (dr == 0 && dv == 0) continue;
                    const std::size_t rr = (r + n + static_cast<std::size_t>(dr + 1) - 1) % n;
                    const std::size_t vv = (v + m + static_cast<std::size_t>(dv + 1) - 1) % m;
                    const double q = power(rr, vv);
                    const bool earlier = dr < 0 || (dr == 0 && dv < 0);
                    if (q > p || (earlier && q == p)) peak = false;
                }
            if (!peak) continue;
            const double dr = parabola_offset(map.at((r + n - 1) % n, v), map.at(r, v), map.at((r + 1) % n, v));
            const double dv = parabola_offset(map.at(r, (v + m - 1) % m), map.at(r, v), map.at(r, (v + 1) % m));
            Detection d;
            d.range_bin = wrap_bin(static_cast<double>(r) + dr, n);
            d.velocity_bin = wrap_bin(static_cast<double>(v) + dv, m);
            d.range_m = map.range_of(d.range_bin);
            d.velocity_mps = map.velocity_of(d.velocity_bin);
            d.power_db = median > 0.0 ? power_to_db(p / median) : INFINITY;
            out.push_back(d);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.power_db > b.power_db; });
    return out;
}

double peak_to_noise_db(const RangeDopplerMap& map, std::size_t range_bin, std::size_t velocity_bin,
                        std::size_t half) {
    const std::size_t n = map.range_bins, m = map.velocity_bins;
    const double noise = noise_floor(map);
    double energy = 0.0;
    std::size_t cells = 0;
    const long h = static_cast<long>(half);
    for (long dr = -h; dr <= h; ++dr)
        for (long dv = -h; dv <= h; ++dv) {
            const std::size_t r = static_cast<std::size_t>((static_cast<long>(range_bin) + dr + static_cast<long>(n) * 4) % static_cast<long>(n));
            const std::size_t v = static_cast<std::size_t>((static_cast<long>(velocity_bin) + dv + static_cast<long>(m) * 4) % static_cast<long>(m));
            energy += map.at(r, v) * map.at(r, v);
            ++cells;
        }
    return power_to_db((energy - static_cast<double>(cells) * noise) / noise);
}

void write_map(const std::filesystem::path& path, const RangeDopplerMap& map) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os.write(kMapMagic, sizeof(kMapMagic));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(map.range_bins));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(map.velocity_bins));
    binio::put<double>(os, map.range_resolution_m);
    binio::put<double>(os, map.velocity_resolution_mps);
    binio::put<double>(os, map.velocity_of(0.0));
    for (double v : map.magnitude) binio::put<float>(os, static_cast<float>(v));
    if (!os) throw FormatError("write failed for " + path.string());
}

RangeDopplerMap read_map(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMapMagic))
        throw FormatError(path.string() + ": not a range-Doppler map (bad magic)");
    std::uint32_t rows = 0, cols = 0;
    double vel_min = 0.0;
    RangeDopplerMap map;
    if (!binio::get(is, rows) || !binio::get(is, cols) || !binio::get(is, map.range_resolution_m) ||
        !binio::get(is, map.velocity_resolution_mps) || !binio::get(is, vel_min))
        throw FormatError(path.string() + ": truncated header");
    map.range_bins = rows;
    map.velocity_bins = cols;
    map.max_range_m = static_cast<double>(rows) * map.range_resolution_m;
    map.max_velocity_mps = -vel_min;
    map.magnitude.resize(static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < map.magnitude.size(); ++i) {
        float f = 0.0f;
        if (!binio::get(is, f))
            throw FormatError(path.string() + ": expected " + std::to_string(map.magnitude.size()) +
                              " map cells, found " + std::to_string(i));
        map.magnitude[i] = f;
    }
    return map;
}

std::string detections_csv_header() { return "range_m,velocity_mps,power_db,range_bin,velocity_bin"; }

std::string detection_csv_row(const Detection& d) {
    return format_double(d.range_m) + "," + format_double(d.velocity_mps) + "," + format_double(d.power_db) + "," +
           format_double(d.range_bin) + "," + format_double(d.velocity_bin);
}

}  // namespace pmcw
