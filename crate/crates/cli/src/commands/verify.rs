use frv_core::ensembles::EigCloud;
use frv_core::models::BorderSpec;
use frv_core::spectra::{hull_radius, planar_compare_points, radial_compare_points, ComparisonReport};
use serde::{Deserialize, Serialize};

use crate::args::VerifyArgs;
use crate::error::{CliError, CliResult};
use crate::io::{load_cloud, write_output, SampleConfig, REPORT_SCHEMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub schema: String,
    pub config: SampleConfig,
    pub config_sha256: String,
    pub data_sha256: String,
    pub border: BorderSpec,
    /// Mean over samples of the mean modulus of the convex-hull vertices.
    pub hull_radius: f64,
    /// Present for circularly symmetric models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<ComparisonReport>,
    pub planar: ComparisonReport,
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    if args.bins == 0 || args.grid == 0 {
        return Err(CliError::Input("bins and grid must be positive".into()));
    }
    let loaded = load_cloud(&args.input, args.sidecar.as_deref())?;
    let model = loaded.config.model;
    let radial = model
        .is_radial()
        .then(|| radial_compare_points(&loaded.points, &model, args.bins))
        .transpose()?;
    let planar = planar_compare_points(&loaded.points, &model, args.grid)?;
    let cloud = EigCloud {
        config: loaded.config,
        points: loaded.points,
    };
    let report = VerifyReport {
        schema: REPORT_SCHEMA.into(),
        config: loaded.sidecar.config,
        config_sha256: loaded.sidecar.config_sha256,
        data_sha256: loaded.sidecar.data_sha256,
        border: model.border(),
        hull_radius: hull_radius(&cloud)?,
        radial,
        planar,
    };
    let mut out = serde_json::to_vec_pretty(&report).expect("serializable report");
    out.push(b'\n');
    write_output(&args.out, &out)
}
