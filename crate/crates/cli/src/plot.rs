use std::fmt::Write;

use hypfpp_core::experiments::ExperimentRecord;

/// A matplotlib script drawing each curve of the record from its CSV,
/// with the fitted exponential overlaid where there is one.
pub fn plot_script(record: &ExperimentRecord, stem: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# Plots for the {} record; run next to its CSV files.",
        record.experiment
    );
    let _ = writeln!(s, "import csv");
    let _ = writeln!(s, "import math");
    let _ = writeln!(s, "import matplotlib");
    let _ = writeln!(s, "matplotlib.use(\"Agg\")");
    let _ = writeln!(s, "import matplotlib.pyplot as plt");
    let _ = writeln!(s);
    let _ = writeln!(s, "def column(path, name):");
    let _ = writeln!(s, "    with open(path) as f:");
    let _ = writeln!(
        s,
        "        return [float(row[name]) for row in csv.DictReader(f)]"
    );
    for curve in record.plot_curves() {
        let csv = format!("{stem}.{}.csv", curve.table);
        let _ = writeln!(s);
        let _ = writeln!(s, "x = column({csv:?}, {:?})", curve.x);
        let _ = writeln!(s, "y = column({csv:?}, {:?})", curve.y);
        let _ = writeln!(s, "fig, ax = plt.subplots()");
        let _ = writeln!(s, "ax.plot(x, y, \"o\", label=\"data\")");
        if let Some(fit) = curve.fit {
            let _ = writeln!(
                s,
                "ax.plot(x, [math.exp(-({} + {} * t)) for t in x], \"-\", label=\"rate {:.4}\")",
                fit.intercept, fit.rate, fit.rate
            );
            let _ = writeln!(s, "ax.set_yscale(\"log\")");
        }
        let _ = writeln!(s, "ax.set_xlabel({:?})", curve.x);
        let _ = writeln!(s, "ax.set_ylabel({:?})", curve.y);
        let _ = writeln!(s, "ax.legend()");
        let _ = writeln!(s, "fig.savefig({:?})", format!("{stem}.{}.png", curve.table));
    }
    s
}
