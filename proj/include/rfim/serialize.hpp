#ifndef RFIM_SERIALIZE_HPP
#define RFIM_SERIALIZE_HPP

#include <string>

#include "rfim/model.hpp"

namespace rfim {

// JSON instance format:
//   {"kind":"long_range"|"explicit", "alpha":a, "c":c,
//    "spins":[{"id":0,"pos":[x,y],"field":h}, ...],
//    "edges":[{"u":0,"v":1,"J":-1.0}, ...]}
// "alpha"/"c" only for long_range, "edges" only for explicit, "pos" optional
// for explicit spins. Grid models carry an extra integer "grid":[ix,iy].
IsingModel load_model(const std::string& text);
std::string save_model(const IsingModel& model);

// States serialize as strings over "+"/"-" indexed by id.
SpinState load_state(const std::string& text);

} // namespace rfim

#endif
