"""OpenFlow 1.0 / 1.3 wire support: constants, message bodies and the codec."""
