use frv_core::ensembles::{realize_model, EnsembleConfig};

use crate::args::SampleArgs;
use crate::error::{CliError, CliResult};
use crate::io::{eigen_table, sidecar_path, write_output, SampleConfig, Sidecar};

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    if args.out.as_os_str() == "-" {
        return Err(CliError::Input("sample needs a file path for --out (the sidecar sits next to it)".into()));
    }
    let cfg = EnsembleConfig {
        model: args.model.model,
        n: args.n,
        samples: args.samples,
        seed: args.seed,
    };
    let cloud = realize_model(&cfg)?;
    let data = eigen_table(&cloud.points);
    let side = Sidecar::new(SampleConfig::from_ensemble(&cfg), &data, cloud.len());
    write_output(&args.out, &data)?;
    write_output(&sidecar_path(&args.out), &side.to_json())
}
