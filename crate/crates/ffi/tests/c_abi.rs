use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use gpm_ffi::*;

fn last_error() -> String {
    let p = gpm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(gpm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn fock_run_through_handles() {
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(gpm_coherent_state_new(100.0, 0, &mut state), GpmStatus::Ok);
        assert_eq!(gpm_state_dim(state), 181);
        assert_eq!(gpm_state_first_label(state), 0);

        let mut record = ptr::null_mut();
        assert_eq!(
            gpm_run_fock(state, 100, 6, 1e8, GpmRounding::Floor, &mut record),
            GpmStatus::Ok
        );
        assert_eq!(gpm_record_rounds(record), 6);
        let mut fid = [0.0; 6];
        assert_eq!(
            gpm_record_fidelities(record, fid.as_mut_ptr(), fid.len()),
            GpmStatus::Ok
        );
        assert!(fid[5] > 0.98 && fid[0] < 0.1, "{fid:?}");
        let mut durations = [0.0; 6];
        assert_eq!(
            gpm_record_durations(record, durations.as_mut_ptr(), 6),
            GpmStatus::Ok
        );
        let first_five: f64 = durations[..5].iter().sum();
        assert!((first_five * 1e9 - 606.0).abs() < 6.0);

        let mut small = [0.0; 2];
        assert_eq!(
            gpm_record_success_probs(record, small.as_mut_ptr(), small.len()),
            GpmStatus::BufferTooSmall
        );
        assert!(last_error().contains("2 values"));

        let mut final_state = ptr::null_mut();
        assert_eq!(
            gpm_record_final_state(record, &mut final_state),
            GpmStatus::Ok
        );
        let mut pops = vec![0.0; gpm_state_dim(final_state)];
        assert_eq!(
            gpm_state_populations(final_state, pops.as_mut_ptr(), pops.len()),
            GpmStatus::Ok
        );
        assert!((pops[100] - fid[5]).abs() < 1e-15);

        gpm_state_free(final_state);
        gpm_record_free(record);
        gpm_state_free(state);
    }
}

#[test]
fn dicke_run_and_qfi() {
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(
            gpm_dicke_product_state_new(100, std::f64::consts::FRAC_PI_2, &mut state),
            GpmStatus::Ok
        );
        assert_eq!(gpm_state_first_label(state), -50);
        let mut record = ptr::null_mut();
        assert_eq!(
            gpm_run_dicke(state, 8, 1e8, GpmRounding::Floor, &mut record),
            GpmStatus::Ok
        );
        let mut out = ptr::null_mut();
        assert_eq!(gpm_record_final_state(record, &mut out), GpmStatus::Ok);
        let mut qfi = 0.0;
        assert_eq!(gpm_dicke_qfi(out, &mut qfi), GpmStatus::Ok);
        assert!((qfi / 5100.0 - 1.0).abs() < 0.02, "{qfi}");

        let mut mode = ptr::null_mut();
        assert_eq!(gpm_coherent_state_new(4.0, 0, &mut mode), GpmStatus::Ok);
        assert_eq!(gpm_dicke_qfi(mode, &mut qfi), GpmStatus::InvalidArgument);
        gpm_state_free(mode);
        gpm_state_free(out);
        gpm_record_free(record);
        gpm_state_free(state);
    }
}

#[test]
fn noisy_record_has_populations_only() {
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(gpm_noisy_coherent_state_new(16, &mut state), GpmStatus::Ok);
        let mut record = ptr::null_mut();
        let status = gpm_run_noisy(
            state,
            GpmProtocol::Resonant,
            16,
            4,
            1e8,
            2e6,
            1e3,
            1e5,
            1e5,
            1e-8,
            &mut record,
        );
        assert_eq!(status, GpmStatus::Ok);
        let len = gpm_record_population_len(record);
        assert_eq!(len, gpm_state_dim(state));
        let mut pops = vec![0.0; len];
        assert_eq!(
            gpm_record_final_populations(record, pops.as_mut_ptr(), len),
            GpmStatus::Ok
        );
        assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        let mut out = ptr::null_mut();
        assert_eq!(
            gpm_record_final_state(record, &mut out),
            GpmStatus::InvalidArgument
        );
        assert!(out.is_null());
        gpm_record_free(record);
        gpm_state_free(state);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut state = ptr::null_mut();
        assert_eq!(
            gpm_coherent_state_new(100.0, 120, &mut state),
            GpmStatus::Truncation
        );
        assert!(
            last_error().contains("truncat") || last_error().contains("tail"),
            "{}",
            last_error()
        );
        assert!(state.is_null());
        assert_eq!(
            gpm_coherent_state_new(-1.0, 0, &mut state),
            GpmStatus::InvalidArgument
        );
        assert_eq!(
            gpm_dicke_product_state_new(3, 1.0, &mut state),
            GpmStatus::InvalidArgument
        );
        assert_eq!(
            gpm_coherent_state_new(1.0, 0, ptr::null_mut()),
            GpmStatus::NullPointer
        );

        let mut record = ptr::null_mut();
        assert_eq!(
            gpm_run_fock(ptr::null(), 1, 1, 1e8, GpmRounding::Floor, &mut record),
            GpmStatus::NullPointer
        );
        // Vacuum has no weight on the n_t = 15 comb after 4 rounds.
        let mut vac = ptr::null_mut();
        assert_eq!(gpm_coherent_state_new(0.0, 20, &mut vac), GpmStatus::Ok);
        assert_eq!(
            gpm_run_fock(vac, 15, 4, 1e8, GpmRounding::Floor, &mut record),
            GpmStatus::ZeroProbability
        );
        assert!(last_error().contains("round 4"), "{}", last_error());
        gpm_state_free(vac);

        assert_eq!(gpm_state_dim(ptr::null()), 0);
        assert!(gpm_record_total_time(ptr::null()).is_nan());
        gpm_state_free(ptr::null_mut());
        gpm_record_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/gpm.h");
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
