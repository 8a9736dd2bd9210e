import streamlit as st

# Set page config FIRST!
st.set_page_config(
    page_title="AMOP Bench: Sparse Recovery Explorer",
    page_icon="📉",
    layout="wide",
    initial_sidebar_state="expanded"
)

import glob
import json
import os
import time
from datetime import datetime

from data_manager import ResultsManager, header_lines
from errors import RejectedInputError
from experiment import KINDS, ExperimentSpec, run_experiment
from progress import LiveProgressPanel

SPECS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "specs")


@st.cache_resource
def get_results_manager():
    return ResultsManager()

results_manager = get_results_manager()

st.markdown("""
<style>
    .main-header {
        text-align: center;
        background: linear-gradient(135deg, #ffffff 0%, #f8fbf8 100%);
        color: #2c3e50;
        padding: 1.5rem;
        border-radius: 12px;
        margin-bottom: 2rem;
        font-size: 1.8rem;
        font-weight: 700;
        border: 1px solid #e2e8f0;
        border-bottom: 4px solid #a7d8de;
    }
    .run-card {
        background: #ffffff;
        padding: 1.2rem 1.5rem;
        border-radius: 10px;
        border-left: 5px solid #a7d8de;
        margin: 0.5rem 0 1.5rem 0;
        border: 1px solid #edf2f7;
    }
</style>
""", unsafe_allow_html=True)


def init_session_state():
    if 'spec_text' not in st.session_state:
        st.session_state.spec_text = ""
    if 'last_result' not in st.session_state:
        st.session_state.last_result = None
    if 'selected_run' not in st.session_state:
        st.session_state.selected_run = ""


def bundled_specs():
    return sorted(glob.glob(os.path.join(SPECS_DIR, "*.json")))


def parse_spec(text):
    """Spec text -> ExperimentSpec, or (None, message) on a field-level problem."""
    try:
        return ExperimentSpec.from_dict(json.loads(text)), None
    except json.JSONDecodeError as e:
        return None, f"Invalid JSON: {e}"
    except RejectedInputError as e:
        return None, str(e)


def render_result(result, path=None):
    spec = result.spec
    st.markdown(f"""
    <div class='run-card'>
        <h3 style='margin-bottom:0.2rem;'>{spec.name}</h3>
        <div style='color:#555;'>{spec.kind} &nbsp;|&nbsp; base_seed {spec.base_seed} &nbsp;|&nbsp; {len(result.table)} row(s)</div>
    </div>
    """, unsafe_allow_html=True)
    st.dataframe(result.table, use_container_width=True)
    body = "\n".join(header_lines(result)) + "\n" + result.table.to_csv(index=False, float_format="%.9g", lineterminator="\n")
    col1, col2 = st.columns(2)
    with col1:
        st.download_button("Download CSV", data=body, file_name=os.path.basename(spec.output), mime="text/csv")
    with col2:
        if result.trials is not None:
            with st.expander("Per-trial records"):
                st.dataframe(result.trials, use_container_width=True)
    if path:
        st.caption(f"Saved to {path}")


init_session_state()

with st.sidebar:
    st.markdown("## 🧪 Experiment Spec")
    specs = bundled_specs()
    if specs:
        choice = st.selectbox("Bundled specs", ["(none)"] + [os.path.basename(p) for p in specs])
        if st.button("Load spec") and choice != "(none)":
            with open(os.path.join(SPECS_DIR, choice), "r") as f:
                st.session_state.spec_text = f.read()
            st.rerun()

    uploaded = st.file_uploader("Or upload a spec", type=["json"])
    if uploaded is not None:
        st.session_state.spec_text = uploaded.getvalue().decode("utf-8")

    st.markdown("### 📚 Previous Runs")
    runs = results_manager.get_all_runs()
    if not runs:
        st.info("No runs recorded yet.")
    for run in runs:
        col1, col2 = st.columns([4, 1])
        with col1:
            if st.button(f"📂 {run}", key=f"select_run_{run}"):
                st.session_state.selected_run = run
                st.session_state.last_result = None
                st.rerun()
        with col2:
            if st.button("🗑️", key=f"delete_run_{run}"):
                results_manager.delete_run_data(run)
                if st.session_state.selected_run == run:
                    st.session_state.selected_run = ""
                st.rerun()

st.markdown("""
<div class='main-header'>
    <span>AMOP Bench: Sparse Recovery Explorer</span>
    <div style='font-size:1.08rem; font-weight:400; margin-top:0.2rem;'>Seeded Monte-Carlo studies of adaptive greedy recovery</div>
</div>
""", unsafe_allow_html=True)

left, right = st.columns([1, 1])

with left:
    st.markdown("### Spec")
    st.session_state.spec_text = st.text_area(
        "Experiment spec (JSON)",
        value=st.session_state.spec_text,
        height=360,
        placeholder='{"kind": "RecoveryPercentage", "name": "gaussian_s4", "m": [64], "trials": 20}',
    )
    seed = st.number_input("base_seed override (blank keeps the spec's)", value=None, step=1, format="%d")
    st.caption(f"Kinds: {', '.join(KINDS)}")

    if st.button("🚀 Run Experiment", type="primary"):
        spec, error = parse_spec(st.session_state.spec_text)
        if error:
            st.error(error)
        else:
            if seed is not None:
                spec = spec.with_seed(int(seed))
            bar = st.progress(0, text="Preparing sweep…")
            log_ph = st.empty()
            panel = LiveProgressPanel(log_ph)

            def on_step(step):
                panel(step)
                if panel.last_progress is not None:
                    bar.progress(min(1.0, panel.last_progress), text=step.get("title", ""))

            started = time.time()
            try:
                result = run_experiment(spec, step_callback=on_step)
                path = results_manager.save_result(result)
                st.session_state.last_result = (result, path)
                bar.progress(1.0, text=f"Finished in {time.time() - started:.1f}s")
            except RejectedInputError as e:
                st.error(f"Rejected: {e}")
            except Exception as e:
                st.error(f"❌ Run failed: {e}")

with right:
    st.markdown("### Results")
    if st.session_state.last_result:
        render_result(*st.session_state.last_result)
    elif st.session_state.selected_run:
        run = st.session_state.selected_run
        entries = results_manager.get_run_data(run) or {}
        for kind, entry in entries.items():
            st.markdown(f"**{run}** · {kind} · last updated {datetime.fromisoformat(entry['last_updated']).strftime('%Y-%m-%d %H:%M:%S')}")
            table = results_manager.load_table(run, kind)
            if table is None:
                st.warning("Result file is missing on disk.")
                continue
            st.dataframe(table, use_container_width=True)
            if st.button(f"Delete {kind}", key=f"delete_{run}_{kind}"):
                results_manager.delete_run_section(run, kind)
                st.rerun()
    else:
        st.info("Load or paste a spec on the left and run it, or pick a previous run in the sidebar.")
