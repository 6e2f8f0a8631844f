//! Runs the examples that need no external data.

macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            #![allow(dead_code)]
            include!($file);

            #[test]
            fn runs() {
                run_example().unwrap();
            }
        }
    };
}

example!(bound_landscape, "../examples/bound_landscape.rs");
example!(pac_bayes_gaussian, "../examples/pac_bayes_gaussian.rs");
example!(kernel_approximation, "../examples/kernel_approximation.rs");
example!(federated_rounds, "../examples/federated_rounds.rs");
example!(contraction, "../examples/contraction.rs");
example!(idx_ingest, "../examples/idx_ingest.rs");
