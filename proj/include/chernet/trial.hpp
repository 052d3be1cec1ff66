#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace chernet {

/// Per-sensor message counts by payload type (consensus-based protocol).
struct MessageCounts {
    std::uint64_t consensus = 0;    // (estimate, z) broadcasts
    std::uint64_t phase1_term = 0;  // Phase-1 termination bit
    std::uint64_t decision = 0;     // (local decision, d) broadcasts
    std::uint64_t phase3_term = 0;  // Phase-3 termination bit with final decision
    std::uint64_t total() const { return consensus + phase1_term + decision + phase3_term; }
};

/// Outcome of one simulated trial of any protocol.
struct TrialRecord {
    std::size_t decision = 0;
    std::size_t true_hypothesis = 0;
    bool correct = false;
    /// Rounds (or samples, for the single-sensor tests) until the global decision.
    std::uint64_t decision_time = 0;
    /// Rounds until the last sensor left Phase 1 (consensus-based protocol only).
    std::uint64_t consensus_time = 0;
    /// Round at which each sensor sent the message carrying its final local decision.
    std::vector<std::uint64_t> trigger_times;
    /// Messages exchanged with the fusion center, both directions (decentralized
    /// protocol), or total broadcasts (consensus-based protocol).
    std::vector<std::uint64_t> comms;
    std::vector<MessageCounts> messages;
    /// Max pairwise entrywise spread of the scaled capability estimates at the
    /// end of Phase 1 (consensus-based protocol only).
    double consensus_spread = 0.0;
    /// False if sensors halted with different final decisions.
    bool unanimous = true;
    /// Observations collected across all sensors.
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
};

}  // namespace chernet
