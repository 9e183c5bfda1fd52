#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cdcv/sim.hpp"

namespace cdcv::detail {

/// Online checker fed with pre-edge state at each rising edge of the clocks
/// it samples.
class Checker {
public:
    explicit Checker(ResolvedChecker rc) : rc_(std::move(rc)) { verdict_.checker = rc_.spec.name(); }
    virtual ~Checker() = default;

    virtual void on_edge(const std::string& clock, const std::vector<std::uint64_t>& pre, std::int64_t tick) = 0;
    const Verdict& verdict() const { return verdict_; }
    bool samples(const std::string& clock) const { return clock == rc_.clock || clock == rc_.rclock; }

protected:
    void fail(std::int64_t tick, const std::string& msg) {
        if (!verdict_.pass) return;
        verdict_.pass = false;
        verdict_.tick = tick;
        verdict_.message = msg;
    }

    ResolvedChecker rc_;
    Verdict verdict_;
};

std::vector<std::unique_ptr<Checker>> make_checkers(const Analysis& a, const std::vector<CheckerSpec>& specs);

class Decider {
public:
    virtual ~Decider() = default;
    virtual bool decide(const std::string& pair) = 0;
};

class RandomDecider : public Decider {
public:
    explicit RandomDecider(const MsiConfig& c) : cfg_(c), rng_(c.seed) {}
    bool decide(const std::string& pair) override {
        double p = cfg_.probability;
        if (auto it = cfg_.pair_probability.find(pair); it != cfg_.pair_probability.end()) p = it->second;
        // 53-bit draw keeps the stream identical across platforms.
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return u < p;
    }

private:
    const MsiConfig& cfg_;
    std::mt19937_64 rng_;
};

/// Replays a decision prefix, then answers "skip".
class ForcedDecider : public Decider {
public:
    explicit ForcedDecider(std::vector<char> prefix) : prefix_(std::move(prefix)) {}
    bool decide(const std::string&) override {
        bool d = n_ < prefix_.size() ? prefix_[n_] != 0 : false;
        ++n_;
        return d;
    }

private:
    std::vector<char> prefix_;
    std::size_t n_ = 0;
};

SimResult run_with(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                   const std::vector<CheckerSpec>& checkers, Decider& d);

const ClockSpec& clock_of_domain(const ConstraintSet& cs, const std::string& domain);

} // namespace cdcv::detail
