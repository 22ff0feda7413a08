macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(rgbe_roundtrip, "rgbe_roundtrip.rs", rgbe_roundtrip_example_runs);
example!(illuminance, "illuminance.rs", illuminance_example_runs);
example!(merge_bracket, "merge_bracket.rs", merge_bracket_example_runs);
example!(calibrate, "calibrate.rs", calibrate_example_runs);
example!(gradient_check, "gradient_check.rs", gradient_check_example_runs);
example!(false_color, "false_color.rs", false_color_example_runs);
example!(ablation, "ablation.rs", ablation_example_runs);
example!(consistency, "consistency.rs", consistency_example_runs);
