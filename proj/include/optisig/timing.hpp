#pragma once

namespace optisig {

// Window cadence and carrier frequencies shared by the descriptor pipeline,
// the modulator, and the verifier.
inline constexpr double kWindowS = 4.5;      // one protection window
inline constexpr double kDowntimeS = 0.5;    // dark gap opening each window
inline constexpr double kModulationS = 4.0;  // active modulation per window
inline constexpr double kFreqData = 3.0;     // data/sync carrier, Hz
inline constexpr double kFreqLoc = 6.0;      // localization beacon, Hz
// Cells are constant within a display frame, so a 6 Hz beacon needs 12
// display frames per second; data bitmaps change every second display frame.
inline constexpr double kDisplayHz = 12.0;

}  // namespace optisig
