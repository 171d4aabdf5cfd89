#include "pmcw/iqfile.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "binio.hpp"

namespace pmcw {

namespace {

constexpr char kMagic[8] = {'P', 'M', 'C', 'W', 'I', 'Q', '1', '\0'};

}  // namespace

std::filesystem::path iq_sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

void write_iq(const std::filesystem::path& path, const IqBuffer& buffer, const IqMetadata& meta) {
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw FormatError("cannot open " + path.string() + " for writing");
        os.write(kMagic, sizeof(kMagic));
        binio::put<std::uint64_t>(os, buffer.size());
        for (const auto& v : buffer.samples) {
            binio::put<float>(os, static_cast<float>(v.real()));
            binio::put<float>(os, static_cast<float>(v.imag()));
        }
        if (!os) throw FormatError("write failed for " + path.string());
    }
    nlohmann::ordered_json j;
    j["format"] = "PMCWIQ1";
    j["sample_format"] = "cf32_le";
    j["sample_count"] = buffer.size();
    j["sample_rate"] = buffer.sample_rate != 0.0 ? buffer.sample_rate : meta.sample_rate;
    j["scenario_hash"] = meta.scenario_hash;
    j["seed"] = meta.seed;
    j["description"] = meta.description;
    std::ofstream side(iq_sidecar_path(path));
    side << j.dump(2) << '\n';
    if (!side) throw FormatError("write failed for " + iq_sidecar_path(path).string());
}

IqBuffer read_iq(const std::filesystem::path& path, IqMetadata* meta) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kMagic))
        throw FormatError(path.string() + ": not a PMCWIQ1 file (bad magic)");
    std::uint64_t count = 0;
    if (!binio::get(is, count)) throw FormatError(path.string() + ": truncated header");

    const auto size = std::filesystem::file_size(path);
    const std::uint64_t available = (size - 16) / 8;
    if (available < count)
        throw FormatError(path.string() + ": header announces " + std::to_string(count) + " samples, payload holds " +
                          std::to_string(available));

    IqBuffer out;
    out.samples.resize(count);
    for (auto& v : out.samples) {
        float re = 0.0f, im = 0.0f;
        binio::get(is, re);
        binio::get(is, im);
        v = Complex(re, im);
    }

    IqMetadata m;
    const auto side = iq_sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream js(side);
        try {
            const auto j = nlohmann::json::parse(js);
            m.sample_rate = j.value("sample_rate", 0.0);
            m.scenario_hash = j.value("scenario_hash", std::string{});
            m.seed = j.value("seed", std::uint64_t{0});
            m.description = j.value("description", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(side.string() + ": " + e.what());
        }
    }
    out.sample_rate = m.sample_rate;
    if (meta) *meta = m;
    return out;
}

}  // namespace pmcw
