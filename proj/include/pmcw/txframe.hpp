#pragma once

#include <cstdint>
#include <vector>

#include "pmcw/common.hpp"
#include "pmcw/seqgen.hpp"
#include "pmcw/sysparams.hpp"

namespace pmcw {

using Bits = std::vector<std::uint8_t>;

struct Segment {
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Sample layout of a transmit frame:
// [ S&C block 1 | S&C block 2 | SFO preamble | payload block 0 | ... | payload block M-1 ]
struct FrameLayout {
    Segment sc_block1;
    Segment sc_block2;
    Segment sfo_preamble;
    std::vector<Segment> payload_blocks;
    std::vector<std::size_t> pilot_indices;

    static FrameLayout from_plan(const FramePlan& plan);
    std::size_t payload_offset() const { return sfo_preamble.offset + sfo_preamble.length; }
    std::size_t total_length() const;
};

// The three register outputs a frame needs: two S&C sequences of length N_S&C, one payload PRBS.
struct FrameSequences {
    ChipSequence sc_first;
    ChipSequence sc_second;
    ChipSequence payload;

    // Built-in table entries for the plan's degrees.
    static FrameSequences for_plan(const FramePlan& plan);
};

struct TxFrame {
    IqBuffer buffer;
    FrameLayout layout;
    FrameSequences sequences;
    Bits bits;
    std::vector<double> symbols;  // per block, +1 on pilots
};

// [seq1 seq1 seq1 | seq2 seq2 seq2]; throws ConfigError if both come from the same register.
CVector build_sc_preamble(const ChipSequence& seq1, const ChipSequence& seq2);

// M_SFO back-to-back copies: one cyclic-prefix copy followed by (M_SFO - 1)/2 identical pairs.
CVector build_sfo_preamble(const ChipSequence& seq, std::size_t sfo_prbs_count);

// Per-block BPSK symbols: +1 on pilot blocks, data bit 0 -> +1 and 1 -> -1 elsewhere.
std::vector<double> block_symbols(const Bits& bits, const FramePlan& plan);

CVector build_payload(const ChipSequence& seq, const Bits& bits, const FramePlan& plan);

TxFrame assemble_frame(const FramePlan& plan, const FrameSequences& seqs, const Bits& bits);

}  // namespace pmcw
