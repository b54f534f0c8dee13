#include "blockgcl/trainer.hpp"

namespace blockgcl {

std::string to_string(TrainMode m) {
    return m == TrainMode::blockwise ? "blockwise" : "end2end";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "blockwise") return TrainMode::blockwise;
    if (s == "end2end") return TrainMode::end2end;
    throw std::invalid_argument("unknown mode: " + s);
}

std::string to_string(Precision p) {
    return p == Precision::f32 ? "f32" : "f64";
}

Precision precision_from_string(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    throw std::invalid_argument("unknown precision: " + s);
}

} // namespace blockgcl
