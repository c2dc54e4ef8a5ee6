"""Two coupled oscillators in a common bath: entanglement and Gaussian discord."""
