#include "vtdl/faults.hpp"

namespace vtdl::faults {

namespace {
Fault g_active = Fault::None;
}

Fault active() { return g_active; }

void set(Fault fault) { g_active = fault; }

bool parse(const std::string& name, Fault* out) {
    if (name == "cutout-before-mix") *out = Fault::CutoutBeforeMix;
    else if (name == "per-frame-alpha") *out = Fault::PerFrameAlpha;
    else if (name == "bank-no-advance") *out = Fault::BankNoAdvance;
    else return false;
    return true;
}

const char* name(Fault fault) {
    switch (fault) {
    case Fault::CutoutBeforeMix: return "cutout-before-mix";
    case Fault::PerFrameAlpha: return "per-frame-alpha";
    case Fault::BankNoAdvance: return "bank-no-advance";
    default: return "none";
    }
}

} // namespace vtdl::faults
