#include "pmcw/txframe.hpp"

#include <string>

namespace pmcw {

FrameLayout FrameLayout::from_plan(const FramePlan& plan) {
    FrameLayout l;
    const std::size_t sc_block = 3 * plan.sc_length;
    l.sc_block1 = {0, sc_block};
    l.sc_block2 = {sc_block, sc_block};
    l.sfo_preamble = {2 * sc_block, plan.sfo_preamble_length()};
    const std::size_t start = l.payload_offset();
    l.payload_blocks.reserve(plan.blocks);
    for (std::size_t k = 0; k < plan.blocks; ++k)
        l.payload_blocks.push_back({start + k * plan.block_length(), plan.block_length()});
    l.pilot_indices = plan.pilot_indices();
    return l;
}

std::size_t FrameLayout::total_length() const {
    if (payload_blocks.empty()) return payload_offset();
    return payload_blocks.back().offset + payload_blocks.back().length;
}

namespace {

// Lowest seed whose boundary chips differ from the neighbouring sequences, so the S&C plateaus end
// exactly at the block edges.
ChipSequence sc_second_sequence(const ChipSequence& first, const ChipSequence& payload) {
    LfsrSpec spec = builtin_lfsr(first.spec.degree, 1);
    const std::uint32_t states = (1u << spec.degree) - 1;
    for (std::uint32_t seed = 1; seed <= states; ++seed) {
        spec.seed = seed;
        ChipSequence s = generate_mls(spec);
        if (s.chips.front() != first.chips.front() && s.chips.back() != first.chips.back() &&
            s.chips.front() != payload.chips.front())
            return s;
    }
    spec.seed = 0;
    return generate_mls(spec);
}

}  // namespace

FrameSequences FrameSequences::for_plan(const FramePlan& plan) {
    plan.validate();
    const int m = plan.degree();
    if (m - 1 < kMinDegree || m > kMaxDegree)
        throw ConfigError("frame plan: N = " + std::to_string(plan.prbs_length) +
                          " needs LFSR degrees outside the built-in table (N must be 15..2047)");
    ChipSequence first = generate_mls(builtin_lfsr(m - 1, 0));
    ChipSequence payload = generate_mls(builtin_lfsr(m, 0));
    return {first, sc_second_sequence(first, payload), payload};
}

CVector build_sc_preamble(const ChipSequence& seq1, const ChipSequence& seq2) {
    if (seq1.size() != seq2.size()) throw ArgumentError("S&C sequences must have equal length");
    if (seq1.spec == seq2.spec)
        throw ConfigError("S&C preamble needs two distinct LFSRs; identical sequences merge the plateaus");
    const std::size_t n = seq1.size();
    CVector out;
    out.reserve(6 * n);
    for (const auto* seq : {&seq1, &seq2})
        for (int rep = 0; rep < 3; ++rep) out.insert(out.end(), seq->chips.begin(), seq->chips.end());
    return out;
}

CVector build_sfo_preamble(const ChipSequence& seq, std::size_t sfo_prbs_count) {
    if (sfo_prbs_count < 3 || sfo_prbs_count % 2 == 0)
        throw ConfigError("SFO preamble needs an odd PRBS count >= 3, got " + std::to_string(sfo_prbs_count));
    CVector out;
    out.reserve(sfo_prbs_count * seq.size());
    for (std::size_t i = 0; i < sfo_prbs_count; ++i) out.insert(out.end(), seq.chips.begin(), seq.chips.end());
    return out;
}

std::vector<double> block_symbols(const Bits& bits, const FramePlan& plan) {
    const std::size_t expected = plan.data_bit_count();
    if (bits.size() != expected)
        throw ArgumentError("payload expects " + std::to_string(expected) + " data bits, got " +
                            std::to_string(bits.size()));
    std::vector<double> symbols(plan.blocks);
    std::size_t next = 0;
    for (std::size_t k = 0; k < plan.blocks; ++k)
        symbols[k] = plan.is_pilot(k) ? 1.0 : (bits[next++] ? -1.0 : 1.0);
    return symbols;
}

CVector build_payload(const ChipSequence& seq, const Bits& bits, const FramePlan& plan) {
    if (seq.size() != plan.prbs_length) throw ArgumentError("payload PRBS length differs from plan N");
    const auto symbols = block_symbols(bits, plan);
    CVector out;
    out.reserve(plan.payload_length());
    for (double s : symbols)
        for (std::size_t a = 0; a < plan.repetitions; ++a)
            for (double c : seq.chips) out.emplace_back(s * c, 0.0);
    return out;
}

TxFrame assemble_frame(const FramePlan& plan, const FrameSequences& seqs, const Bits& bits) {
    plan.validate();
    if (seqs.sc_first.size() != plan.sc_length || seqs.sc_second.size() != plan.sc_length)
        throw ArgumentError("S&C sequence length differs from plan N_S&C");

    TxFrame frame;
    frame.layout = FrameLayout::from_plan(plan);
    frame.sequences = seqs;
    frame.bits = bits;
    frame.symbols = block_symbols(bits, plan);

    auto& samples = frame.buffer.samples;
    samples.reserve(plan.frame_length());
    const CVector sc = build_sc_preamble(seqs.sc_first, seqs.sc_second);
    const CVector sfo = build_sfo_preamble(seqs.payload, plan.sfo_prbs_count);
    const CVector payload = build_payload(seqs.payload, bits, plan);
    samples.insert(samples.end(), sc.begin(), sc.end());
    samples.insert(samples.end(), sfo.begin(), sfo.end());
    samples.insert(samples.end(), payload.begin(), payload.end());
    frame.buffer.sample_rate = plan.sample_rate;
    return frame;
}

}  // namespace pmcw
