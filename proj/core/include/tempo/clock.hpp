#pragma once

namespace tempo {

// Environment steps consumed so far (n) out of the total training horizon (N).
struct LifetimeClock {
  long long n = 0;
  long long horizon = 1;

  double frac() const { return static_cast<double>(n) / static_cast<double>(horizon); }
};

}  // namespace tempo
