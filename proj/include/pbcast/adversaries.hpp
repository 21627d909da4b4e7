#pragma once

#include "pbcast/simnet.hpp"

#include <iosfwd>
#include <map>
#include <memory>

namespace pbcast {

// Byzantine processes stay silent; the correct sender broadcasts message 1.
std::unique_ptr<Adversary> passive_adversary(Message m = 1);

// Per correct process, the number of Byzantine slots in its echo sample.
using ByzantineCounts = std::vector<std::uint32_t>;

// Class key of a Byzantine count vector, as used in table files.
std::string population_key(const ByzantineCounts& f);

// Schedules for the Simplified Sieve arena. Correct processes are delivered
// to in id order. first[key] lists the message given to each of the C
// processes before any correct process delivers; second[key][n] lists the
// messages for the remaining C - n processes once the first delivery
// happened after n first-phase steps. The key "*" matches every class.
struct TwoPhaseTable {
    std::uint32_t c = 0;
    std::map<std::string, std::vector<Message>> first;
    std::map<std::string, std::map<std::uint32_t, std::vector<Message>>> second;

    // Throws ConfigError unless the table is total and every entry names a
    // message in 1..C.
    void validate() const;
    const std::vector<Message>& first_phase(const ByzantineCounts& f) const;
    const std::vector<Message>& second_phase(const ByzantineCounts& f, std::uint32_t n) const;
};

// Message 1 to every process until the first delivery, message 2 afterwards.
TwoPhaseTable default_two_phase_table(std::uint32_t c);

void write_json(std::ostream& os, const TwoPhaseTable& t);
// Throws ConfigError on malformed input.
TwoPhaseTable read_two_phase_table(std::istream& is);

struct SieveGameResult {
    bool consistency_violated = false;
    // First-phase steps taken when the first correct delivery happened; 0
    // when no correct process delivered during the first phase.
    std::uint32_t n_h = 0;
};

// Byzantine sender, pb delivery driven by the table. Played on a direct model
// of the echo phase in which every Byzantine sample slot has echoed every
// message before the first phase starts.
SieveGameResult run_simplified_sieve_game(const SystemConfig& config, const ProtocolParams& params,
                                          const TwoPhaseTable& table, std::uint64_t seed);

// Byzantine sender over an abstract pcb layer. Every correct process
// pcb-delivers m_star; the Byzantine processes send Ready for both messages
// to everyone that subscribed to them.
class ContagionConsistencyAdversary : public Adversary {
public:
    // Throws ConfigError when m_alt == m_star.
    ContagionConsistencyAdversary(Message m_star, Message m_alt);
    bool act(AdversaryApi& api) override;
    // True if some correct process delivered m_alt.
    bool succeeded(const SimWorld& w) const;

private:
    Message m_star_, m_alt_;
    std::uint32_t next_ = 0;
    bool readied_ = false;
};

// Correct sender over an abstract pcb layer. Each round one more correct
// process pcb-delivers; the Byzantine processes hold their Ready back until
// releasing it would make some, but not all, correct processes deliver.
class ContagionTotalityAdversary : public Adversary {
public:
    explicit ContagionTotalityAdversary(Message m = 1) : m_(m) {}
    bool act(AdversaryApi& api) override;
    std::uint32_t rounds() const { return round_; }

private:
    Message m_;
    std::uint32_t round_ = 0;
    bool done_ = false;
};

struct AttackOutcome {
    bool violated = false;
    std::uint64_t steps = 0;
};

AttackOutcome run_contagion_consistency_attack(const SystemConfig& config, const ProtocolParams& params,
                                               std::uint64_t seed);
AttackOutcome run_contagion_totality_attack(const SystemConfig& config, const ProtocolParams& params,
                                            std::uint64_t seed);

}  // namespace pbcast
