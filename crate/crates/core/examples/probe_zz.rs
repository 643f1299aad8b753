use fluxgate_core::coupled::{assemble_and_label, label, CoupledSpec};
use fluxgate_core::dynamics::*;
use fluxgate_core::linalg::{c, max_abs_diff, C64};
use fluxgate_core::pulse::PulseProgram;
use fluxgate_core::rwa::{build_collapse_operators, CoherenceTable, RwaModel};
use fluxgate_core::spectrum::FluxoniumSpec;
use nalgebra::DMatrix;

fn main() {
    let pi = std::f64::consts::PI;
    let spec = CoupledSpec {
        qubit_a: FluxoniumSpec::new(1.051, 0.753, 5.263, pi).unwrap(),
        qubit_b: FluxoniumSpec::new(1.069, 0.771, 3.870, pi).unwrap(),
        j_c: 0.248,
        levels_per_qubit: 6,
        basis_dim: 80,
    };
    let s = assemble_and_label(&spec).unwrap();

    // issue 2: RWA vs full phase at different f_d
    for (f_d, om) in [(4.6, 0.030), (4.57, 0.030), (4.575, 0.025)] {
        let mut pulse = PulseProgram::new(f_d, 20.0, 60.0, 0.0).unwrap();
        pulse.eps_ratio = 1.3;
        let per_unit = s.rabi_frequency(1.0, 1.3, label(1, 1), label(2, 1)).unwrap();
        pulse.amplitude = om / per_unit;
        let model = RwaModel::from_spectrum(&s, f_d, pulse.eps_a(), pulse.eps_b()).unwrap();
        let u_rwa = evolve_rwa(&model, &pulse, 1.0).unwrap();
        let comp = [
            s.index_of(label(0, 0)).unwrap(),
            s.index_of(label(0, 1)).unwrap(),
            s.index_of(label(1, 0)).unwrap(),
            s.index_of(label(1, 1)).unwrap(),
        ];
        let uf = evolve_unitary_columns(&s, &pulse, &comp);
        let ph = |d: [C64; 4]| -> f64 { -(d[0].arg()) - (d[3].arg()) + d[1].arg() + d[2].arg() };
        let ur = u_rwa.propagator().unwrap();
        let a = ph([ur[(0, 0)], ur[(1, 1)], ur[(2, 2)], ur[(3, 3)]]);
        let b = ph([uf[(comp[0], 0)], uf[(comp[1], 1)], uf[(comp[2], 2)], uf[(comp[3], 3)]]);
        let wrap = |x: f64| (x + pi).rem_euclid(2.0 * pi) - pi;
        println!("f_d={f_d} om={om}: rwa={:.5} full={:.5} rel={:.3}", wrap(a), wrap(b), (wrap(a)-wrap(b)).abs()/wrap(b).abs());
    }

    // issue 1: superop vs direct
    let model = RwaModel::six_level(57e-3, 8e-3, 52.4e-3, 52.4e-3 / 1.114, -0.3e-3);
    let t = CoherenceTable::main_device_average();
    let ops = build_collapse_operators(&t, &model).unwrap();
    let pulse = PulseProgram::new(4.545, 10.0, 40.0, 0.9).unwrap();
    let channel = lindblad_channel(&model, &pulse, 1.0, &ops).unwrap();
    let mut rho0 = DMatrix::<C64>::zeros(6, 6);
    rho0[(3, 3)] = c(0.6, 0.0);
    rho0[(2, 2)] = c(0.4, 0.0);
    rho0[(2, 3)] = c(0.3, 0.1);
    rho0[(3, 2)] = c(0.3, -0.1);
    let direct = evolve_lindblad(&model, &pulse, 1.0, &ops, &rho0, LindbladOptions::default()).unwrap();
    println!("direct meta: {:?}", direct.meta());
    let via = channel.apply(&rho0);
    println!("superop diff = {:.3e}", max_abs_diff(direct.density().unwrap(), &via));
}
