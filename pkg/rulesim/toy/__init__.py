from .toy import (
    BasinScan,
    FlowResult,
    FlowRule,
    ToyInstance,
    ToyProblem,
    Verdict,
    basin_scan,
    contracts_near_root,
    eprop_jacobian,
    flow_field,
    integrate_flow,
    poly_readout,
    scan_instances,
    sign_hypothesis_holds,
)
