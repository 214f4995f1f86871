#pragma once

#include <string>

namespace vtdl::faults {

/// Deliberate defects switchable at runtime so `vtdl selfcheck` can prove the
/// invariance suite actually detects broken implementations. Never enabled
/// outside the selfcheck command and tests.
enum class Fault {
    None,
    CutoutBeforeMix, // run cutout before the mixes in the TCA cascade
    PerFrameAlpha,   // vary the mix coefficient across frames
    BankNoAdvance,   // memory bank overwrites without advancing its cursor
};

Fault active();
void set(Fault fault);

/// Parses "cutout-before-mix", "per-frame-alpha" or "bank-no-advance".
bool parse(const std::string& name, Fault* out);

const char* name(Fault fault);

} // namespace vtdl::faults
