//! `capflow export-mesh`: OBJ triangulation of an `n = 2` checkpoint.

use capflow::flow::Checkpoint;

use crate::output;
use crate::{mesh, Context, ExportMeshArgs, Failure};

pub fn execute(ctx: &Context, args: &ExportMeshArgs) -> Result<(), Failure> {
    let (state, config) = Checkpoint::load(&args.checkpoint)?.into_state()?;
    let mesh = mesh::triangulate(&state.field, config.theta, args.azimuths)?;
    let path = match &args.path {
        Some(p) => p.clone(),
        None => {
            let dir = ctx.out_dir(None);
            output::create_dir(&dir)?;
            dir.join("mesh.obj")
        }
    };
    output::write_file(&path, mesh.to_obj().as_bytes())?;
    ctx.progress(format_args!(
        "{}: {} vertices, {} faces",
        path.display(),
        mesh.vertices.len(),
        mesh.faces.len()
    ));
    Ok(())
}
