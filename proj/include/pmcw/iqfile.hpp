#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pmcw/common.hpp"

namespace pmcw {

// 16-byte header: magic "PMCWIQ1\0" and a little-endian u64 sample count, followed by
// interleaved little-endian float32 I/Q. Metadata lives in a JSON sidecar at <path>.json.
struct IqMetadata {
    double sample_rate = 0.0;
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::string description;
};

std::filesystem::path iq_sidecar_path(const std::filesystem::path& path);

void write_iq(const std::filesystem::path& path, const IqBuffer& buffer, const IqMetadata& meta = {});

// Sample rate comes from the sidecar when present. Throws FormatError on a bad magic or a
// payload shorter than the header count.
IqBuffer read_iq(const std::filesystem::path& path, IqMetadata* meta = nullptr);

}  // namespace pmcw
