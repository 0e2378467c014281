macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(authority_toy, "authority_toy.rs", authority_toy_runs);
example!(ingest_snapshot, "ingest_snapshot.rs", ingest_snapshot_runs);
example!(trade_war, "trade_war.rs", trade_war_runs);
example!(globalization, "globalization.rs", globalization_runs);
example!(verify_oracle, "verify_oracle.rs", verify_oracle_runs);
example!(
    reference_tables,
    "reference_tables.rs",
    reference_tables_runs
);
