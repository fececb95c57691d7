//! C ABI surface (populated once the core API is final).
