# Core numerics for the generalized Heun operator toolkit
