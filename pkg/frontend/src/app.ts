// DOM wiring for the dashboard. Everything statistical arrives from the
// API; this file owns navigation, the import form, chart insertion,
// hover readouts, clipboard copy, and PNG export. Pure logic lives in
// the sibling modules so it stays testable without a browser.

import { ApiError, Client, JobFailedError, pollToCompletion } from "./api.js";
import {
    CONTROL_COLOR,
    StepChart,
    TREATED_COLOR,
    scaleInvert,
    svgBars,
    svgCalibration,
    svgCorrelation,
    svgDensity,
    svgForest,
    svgHistogram,
    svgStepCurves,
} from "./charts.js";
import {
    AnalysisKind,
    Estimand,
    ImportFormState,
    formToConfig,
    initialFormState,
    resetForm,
    submitProblems,
} from "./form.js";
import { formatHover, hoverReadout } from "./step.js";
import {
    AnalysisConfigJson,
    EdaReportJson,
    ResultsDocumentJson,
    SurvivalBlockJson,
} from "./types.js";
import {
    buildForestRows,
    buildMetricRows,
    buildTable1Rows,
    calibrationPoints,
    formatP,
    histogramBars,
    overviewCards,
    table1Header,
} from "./viewmodel.js";

// ------------------------------------------------------------- helpers

type Attrs = Record<string, string | boolean | ((ev: Event) => void)>;

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Attrs = {}, ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
        if (typeof value === "function") {
            node.addEventListener(key.replace(/^on/, ""), value);
        } else if (typeof value === "boolean") {
            if (value) node.setAttribute(key, "");
        } else {
            node.setAttribute(key, value);
        }
    }
    for (const child of children) {
        node.append(child);
    }
    return node;
}

function clear(node: HTMLElement): HTMLElement {
    node.replaceChildren();
    return node;
}

function fieldRow(label: string, control: HTMLElement,
                  errorSlot?: HTMLElement): HTMLElement {
    const row = el("div", { class: "field-row" },
        el("label", { class: "field-label" }, label), control);
    if (errorSlot) row.append(errorSlot);
    return row;
}

function select(values: string[], current: string,
                onChange: (v: string) => void,
                placeholder = "— select —"): HTMLSelectElement {
    const node = el("select", {
        onchange: () => onChange(node.value),
    });
    node.append(el("option", { value: "" }, placeholder));
    for (const v of values) {
        const opt = el("option", { value: v }, v);
        if (v === current) opt.setAttribute("selected", "");
        node.append(opt);
    }
    node.value = current;
    return node;
}

function multiSelect(values: string[], current: string[],
                     onChange: (v: string[]) => void): HTMLSelectElement {
    const node = el("select", {
        multiple: true, size: String(Math.min(6, Math.max(3, values.length))),
        onchange: () => onChange(
            Array.from(node.selectedOptions).map((o) => o.value)),
    }) as HTMLSelectElement;
    for (const v of values) {
        const opt = el("option", { value: v }, v);
        if (current.includes(v)) opt.setAttribute("selected", "");
        node.append(opt);
    }
    return node;
}

function textInput(current: string, onChange: (v: string) => void,
                   placeholder = ""): HTMLInputElement {
    const node = el("input", {
        type: "text", value: current, placeholder,
        oninput: () => onChange(node.value),
    }) as HTMLInputElement;
    node.value = current;
    return node;
}

// PNG export: inflate the SVG markup to its viewBox size, rasterize at
// 2x through a canvas, and hand the browser a download link.
function exportPng(svgMarkup: string, filename: string): void {
    const m = /viewBox="0 0 (\d+) (\d+)"/.exec(svgMarkup);
    const w = m ? Number(m[1]) : 600;
    const h = m ? Number(m[2]) : 400;
    const sized = svgMarkup.replace(
        "<svg ", `<svg width="${w}" height="${h}" `);
    const blob = new Blob([sized], { type: "image/svg+xml;charset=utf-8" });
    const url = URL.createObjectURL(blob);
    const img = new Image();
    img.onload = () => {
        const canvas = document.createElement("canvas");
        canvas.width = w * 2;
        canvas.height = h * 2;
        const ctx = canvas.getContext("2d");
        if (!ctx) return;
        ctx.scale(2, 2);
        ctx.drawImage(img, 0, 0);
        URL.revokeObjectURL(url);
        const a = document.createElement("a");
        a.href = canvas.toDataURL("image/png");
        a.download = filename;
        a.click();
    };
    img.src = url;
}

// Chart card: the SVG plus its PNG-export button.
function chartCard(svgMarkup: string, filename: string): HTMLElement {
    const body = el("div", { class: "chart-body" });
    body.innerHTML = svgMarkup;
    return el("div", { class: "chart-card" },
        body,
        el("button", {
            class: "png-button",
            onclick: () => exportPng(svgMarkup, filename),
        }, "Save as PNG"));
}

function banner(host: HTMLElement, message: string): void {
    const note = el("div", { class: "banner" },
        el("span", {}, message),
        el("button", {
            class: "banner-close",
            onclick: () => note.remove(),
        }, "×"));
    host.prepend(note);
}

function errorText(err: unknown): string {
    if (err instanceof ApiError) {
        return err.detail ? `${err.message}: ${err.detail}` : err.message;
    }
    return err instanceof Error ? err.message : String(err);
}

// ------------------------------------------------------- one dashboard

type Page = "import" | "summary" | "results";

const PAGES: { id: Page; label: string }[] = [
    { id: "import", label: "Data Import" },
    { id: "summary", label: "Summary Statistics" },
    { id: "results", label: "Results" },
];

class Dashboard {
    kind: AnalysisKind;
    client: Client;
    root: HTMLElement;
    state: ImportFormState;
    datasetId: string | null = null;
    columns: string[] = [];
    nRows = 0;
    jobId: string | null = null;
    results: ResultsDocumentJson | null = null;
    submittedConfig: AnalysisConfigJson | null = null;
    page: Page = "import";

    private pageButtons = new Map<Page, HTMLButtonElement>();
    private pageHost: HTMLElement;
    private fieldErrors = new Map<string, HTMLElement>();

    constructor(kind: AnalysisKind, client: Client) {
        this.kind = kind;
        this.client = client;
        this.state = initialFormState();
        this.state.analysisKind = kind;
        this.pageHost = el("div", { class: "page-host" });
        const tabs = el("div", { class: "page-tabs" });
        for (const p of PAGES) {
            const button = el("button", {
                class: "page-tab",
                onclick: () => this.show(p.id),
            }, p.label) as HTMLButtonElement;
            this.pageButtons.set(p.id, button);
            tabs.append(button);
        }
        this.root = el("section", { class: "dashboard" }, tabs, this.pageHost);
        this.show("import");
    }

    pageAvailable(page: Page): boolean {
        if (page === "import") return true;
        if (page === "summary") {
            return this.datasetId !== null &&
                submitProblems(this.state).length === 0;
        }
        return this.jobId !== null;
    }

    show(page: Page): void {
        if (!this.pageAvailable(page)) page = this.page;
        this.page = page;
        for (const [id, button] of this.pageButtons) {
            button.classList.toggle("active", id === page);
            button.disabled = !this.pageAvailable(id);
        }
        clear(this.pageHost);
        if (page === "import") this.renderImport();
        else if (page === "summary") this.renderSummary();
        else this.renderResults();
    }

    refreshTabs(): void {
        for (const [id, button] of this.pageButtons) {
            button.disabled = !this.pageAvailable(id);
        }
    }

    // ---------------------------------------------------- import page

    private fieldError(name: string): HTMLElement {
        const slot = el("span", { class: "field-error" });
        this.fieldErrors.set(name, slot);
        return slot;
    }

    private clearFieldErrors(): void {
        for (const slot of this.fieldErrors.values()) clear(slot);
    }

    // A config_error names the thing it rejects; route it to the nearest
    // field so it renders inline, falling back to the form-level slot.
    private placeServerError(message: string): void {
        this.clearFieldErrors();
        const lower = message.toLowerCase();
        const order: [string, string[]][] = [
            ["outcomeLevel", ["outcome level", "outcome_positive"]],
            ["outcome", ["outcome"]],
            ["treatmentLevel", ["treatment level", "treatment_positive",
                                "dichotomous"]],
            ["treatment", ["treatment"]],
            ["survival", ["survival", "date", "cutoff", "start", "end"]],
            ["seed", ["seed"]],
        ];
        for (const [name, needles] of order) {
            if (needles.some((n) => lower.includes(n))) {
                const slot = this.fieldErrors.get(name);
                if (slot) {
                    slot.append(message);
                    return;
                }
            }
        }
        const general = this.fieldErrors.get("form");
        if (general) general.append(message);
    }

    private renderImport(): void {
        this.fieldErrors.clear();
        const host = this.pageHost;

        const uploadStatus = el("span", { class: "upload-status" },
            this.datasetId
                ? `dataset ${this.datasetId} (${this.nRows} rows, ` +
                  `${this.columns.length} columns)`
                : "no dataset uploaded");
        const uploadError = this.fieldError("upload");
        const fileInput = el("input", {
            type: "file", accept: ".csv,text/csv",
            onchange: async () => {
                const file = (fileInput as HTMLInputElement).files?.[0];
                if (!file) return;
                clear(uploadError);
                try {
                    const res = await this.client.uploadDataset(file);
                    this.datasetId = res.dataset_id;
                    this.columns = res.column_names;
                    this.nRows = res.n_rows;
                    this.renderImportBody();
                } catch (err) {
                    uploadError.append(errorText(err));
                }
            },
        }) as HTMLInputElement;

        host.append(
            el("h2", {}, `${this.kind} outcome analysis`),
            fieldRow("CSV file", fileInput, uploadError),
            fieldRow("", uploadStatus),
        );
        this.formHost = el("div", {});
        host.append(this.formHost);
        this.renderImportBody();
    }

    private formHost: HTMLElement = el("div", {});

    private renderImportBody(): void {
        const host = clear(this.formHost);
        if (!this.datasetId) return;
        const s = this.state;
        const cols = this.columns;
        const rerender = () => this.renderImportBody();

        host.append(fieldRow(
            "Outcome column Y",
            select(cols, s.outcomeColumn, (v) => {
                s.outcomeColumn = v;
                rerender();
            }),
            this.fieldError("outcome")));

        if (this.kind !== "continuous") {
            const label = this.kind === "survival"
                ? "Value meaning the event occurred"
                : "Value meaning the outcome occurred";
            host.append(fieldRow(
                label,
                textInput(s.outcomePositiveLevel, (v) => {
                    s.outcomePositiveLevel = v;
                    this.updateSubmit();
                }, "e.g. 1"),
                this.fieldError("outcomeLevel")));
        }

        host.append(fieldRow(
            "Treatment column A",
            select(cols, s.treatmentColumn, (v) => {
                s.treatmentColumn = v;
                rerender();
            }),
            this.fieldError("treatment")));
        host.append(fieldRow(
            "Value meaning treated",
            textInput(s.treatmentPositiveLevel, (v) => {
                s.treatmentPositiveLevel = v;
                this.updateSubmit();
            }, "e.g. 1"),
            this.fieldError("treatmentLevel")));

        host.append(fieldRow(
            "Categorical covariates",
            multiSelect(cols, s.categoricalColumns, (v) => {
                s.categoricalColumns = v;
                this.updateSubmit();
            })));
        host.append(fieldRow(
            "Exclude from outcome model",
            multiSelect(cols, s.excludedFromOutcomeModel, (v) => {
                s.excludedFromOutcomeModel = v;
                this.updateSubmit();
            })));
        host.append(fieldRow(
            "Exclude from treatment model",
            multiSelect(cols, s.excludedFromTreatmentModel, (v) => {
                s.excludedFromTreatmentModel = v;
                this.updateSubmit();
            })));

        host.append(fieldRow(
            "Estimand",
            select(["ATE", "ATT", "ATC"], s.estimand, (v) => {
                s.estimand = (v || "ATE") as Estimand;
                this.updateSubmit();
            }, "ATE")));

        if (this.kind === "survival") {
            host.append(el("h3", {}, "Follow-up window"));
            host.append(fieldRow(
                "Start date column",
                select(cols, s.survival.startColumn, (v) => {
                    s.survival.startColumn = v;
                    this.updateSubmit();
                }),
                this.fieldError("survival")));
            host.append(fieldRow(
                "End date column",
                select(cols, s.survival.endColumn, (v) => {
                    s.survival.endColumn = v;
                    this.updateSubmit();
                })));
            host.append(fieldRow(
                "Date format",
                select(["YYYY-MM-DD", "DD/MM/YYYY", "MM/DD/YYYY"],
                       s.survival.dateFormat, (v) => {
                           s.survival.dateFormat = v || "YYYY-MM-DD";
                           this.updateSubmit();
                       }, "YYYY-MM-DD")));
            host.append(fieldRow(
                "Time unit",
                select(["days", "months", "years"], s.survival.timeUnit,
                       (v) => {
                           s.survival.timeUnit = v || "days";
                           this.updateSubmit();
                       }, "days")));
            host.append(fieldRow(
                "Censor follow-up after",
                textInput(s.survival.cutoff, (v) => {
                    s.survival.cutoff = v;
                    this.updateSubmit();
                }, "e.g. 730")));
        }

        host.append(fieldRow(
            "Random seed",
            textInput(s.seed, (v) => {
                s.seed = v;
                this.updateSubmit();
            }),
            this.fieldError("seed")));

        this.problemsList = el("ul", { class: "problems" });
        this.submitButton = el("button", {
            class: "primary",
            onclick: () => void this.startAnalysis(),
        }, "Start Analysis") as HTMLButtonElement;
        const resetButton = el("button", {
            onclick: () => this.resetDashboard(),
        }, "Reset Dashboard for New Analysis");

        host.append(
            this.fieldError("form"),
            this.problemsList,
            el("div", { class: "actions" }, this.submitButton, resetButton));
        this.updateSubmit();
    }

    private problemsList: HTMLUListElement = el("ul", {});
    private submitButton: HTMLButtonElement =
        el("button", {}) as HTMLButtonElement;

    private updateSubmit(): void {
        const problems = submitProblems(this.state);
        this.submitButton.disabled = problems.length > 0;
        clear(this.problemsList);
        for (const p of problems) {
            this.problemsList.append(el("li", {}, p));
        }
        this.refreshTabs();
    }

    private resetDashboard(): void {
        this.state = resetForm();
        this.state.analysisKind = this.kind;
        this.datasetId = null;
        this.columns = [];
        this.nRows = 0;
        this.jobId = null;
        this.results = null;
        this.submittedConfig = null;
        this.show("import");
    }

    private async startAnalysis(): Promise<void> {
        if (!this.datasetId) return;
        const config = formToConfig(this.state);
        this.clearFieldErrors();
        try {
            const res = await this.client.startAnalysis(
                this.datasetId, config, Number(this.state.seed));
            this.jobId = res.job_id;
            this.results = null;
            this.submittedConfig = config;
            this.show("results");
        } catch (err) {
            this.placeServerError(errorText(err));
        }
    }

    // --------------------------------------------------- summary page

    private renderSummary(): void {
        const host = this.pageHost;
        if (!this.datasetId) return;
        const config = formToConfig(this.state);
        const datasetId = this.datasetId;

        const overviewHost = el("div", { class: "cards" });
        const edaHost = el("div", {});
        const table1Host = el("div", {});
        const corrHost = el("div", {});
        host.append(
            el("h2", {}, "Summary statistics"),
            overviewHost,
            el("h3", {}, "Explore a variable"),
            edaHost,
            el("h3", {}, "Table 1"),
            table1Host,
            el("h3", {}, "Correlations"),
            corrHost);

        this.client.overview(datasetId, config).then((ov) => {
            for (const card of overviewCards(ov, this.kind)) {
                overviewHost.append(el("div", { class: "card" },
                    el("div", { class: "card-value" }, card.value),
                    el("div", { class: "card-label" }, card.label)));
            }
        }).catch((err) => banner(host, errorText(err)));

        this.renderEdaPicker(edaHost, datasetId, config);
        this.renderTable1(table1Host, datasetId, config);
        this.renderCorrelation(corrHost, datasetId);
    }

    private renderEdaPicker(host: HTMLElement, datasetId: string,
                            config: AnalysisConfigJson): void {
        const reportHost = el("div", {});
        const picker = select(this.columns, "", (variable) => {
            clear(reportHost);
            if (!variable) return;
            this.client.eda(datasetId, variable, config).then((report) => {
                this.renderEdaReport(reportHost, report);
            }).catch((err) => banner(this.pageHost, errorText(err)));
        }, "— pick a variable —");
        host.append(fieldRow("Variable", picker), reportHost);
    }

    private renderEdaReport(host: HTMLElement, report: EdaReportJson): void {
        clear(host);
        const summary = el("table", { class: "stats" });
        const keys = Object.keys(report.summary);
        summary.append(
            el("tr", {}, ...keys.map((k) => el("th", {}, k))),
            el("tr", {}, ...keys.map((k) => {
                const v = report.summary[k];
                return el("td", {},
                    v === null ? "" : Number(v).toFixed(3));
            })));
        host.append(summary);
        for (const note of report.notes) {
            host.append(el("p", { class: "note" }, note));
        }
        const charts = el("div", { class: "chart-grid" });
        if (report.kind === "continuous" && report.histogram) {
            charts.append(chartCard(
                svgBars(report.histogram.edges, report.histogram.counts,
                        `${report.variable} distribution`, report.variable),
                `${report.variable}-histogram.png`));
            if (report.densities) {
                charts.append(chartCard(
                    svgDensity(report.densities, report.variable),
                    `${report.variable}-density.png`));
            }
        }
        if (report.kind === "categorical" && report.proportions) {
            const table = el("table", { class: "stats" },
                el("tr", {},
                   el("th", {}, "level"),
                   el("th", {}, "proportion"),
                   ...Object.keys(report.arm_counts ?? {}).sort().map(
                       (arm) => el("th", {}, `n (arm ${arm})`))));
            for (const level of Object.keys(report.proportions).sort()) {
                const armCells = Object.keys(report.arm_counts ?? {}).sort()
                    .map((arm) => el(
                        "td", {},
                        String(report.arm_counts?.[arm]?.[level] ?? 0)));
                table.append(el("tr", {},
                    el("td", {}, level),
                    el("td", {},
                       (report.proportions[level] * 100).toFixed(1) + "%"),
                    ...armCells));
            }
            host.append(table);
        }
        host.append(charts);
    }

    private renderTable1(host: HTMLElement, datasetId: string,
                         config: AnalysisConfigJson): void {
        this.client.table1(datasetId, config).then((res) => {
            const header = table1Header(res.table1, config.treatment_column);
            const table = el("table", { class: "table1" },
                el("tr", {}, ...header.map((h) => el("th", {}, h))));
            for (const row of buildTable1Rows(res.table1)) {
                table.append(el("tr", {},
                    el("td", { class: row.indent ? "indent" : "" }, row.label),
                    el("td", {}, row.control),
                    el("td", {}, row.treated),
                    el("td", {}, row.p),
                    el("td", {}, row.smd)));
            }
            const copyStatus = el("span", { class: "copy-status" });
            host.append(
                table,
                el("div", { class: "actions" },
                   el("button", {
                       onclick: () => {
                           navigator.clipboard.writeText(res.tsv).then(
                               () => { copyStatus.textContent = "copied"; },
                               () => { copyStatus.textContent = "copy failed"; });
                       },
                   }, "Copy Table 1 as tab-separated text"),
                   copyStatus));
        }).catch((err) => banner(this.pageHost, errorText(err)));
    }

    private renderCorrelation(host: HTMLElement, datasetId: string): void {
        const chartHost = el("div", {});
        const picker = multiSelect(this.columns, [], () => undefined);
        const button = el("button", {
            onclick: () => {
                const variables = Array.from(picker.selectedOptions)
                    .map((o) => o.value);
                clear(chartHost);
                this.client.correlation(datasetId, variables).then((res) => {
                    chartHost.append(chartCard(
                        svgCorrelation(res.variables, res.matrix),
                        "correlation.png"));
                }).catch((err) => banner(this.pageHost, errorText(err)));
            },
        }, "Compute correlations");
        host.append(fieldRow("Numeric variables", picker),
                    el("div", { class: "actions" }, button), chartHost);
    }

    // --------------------------------------------------- results page

    private renderResults(): void {
        const host = this.pageHost;
        host.append(el("h2", {}, "Results"));
        if (!this.jobId) return;
        if (this.results) {
            this.renderResultsDocument(host, this.results);
            return;
        }
        const stageLabel = el("p", { class: "stage" }, "pending");
        host.append(stageLabel);
        const jobId = this.jobId;
        pollToCompletion(this.client, jobId, (label) => {
            stageLabel.textContent = label;
        }).then((doc) => {
            if (this.jobId !== jobId) return;  // reset or restarted meanwhile
            this.results = doc;
            if (this.page === "results") {
                clear(host);
                host.append(el("h2", {}, "Results"));
                this.renderResultsDocument(host, doc);
            }
        }).catch((err) => {
            stageLabel.remove();
            if (err instanceof JobFailedError) {
                host.append(el("div", { class: "error-panel" },
                    el("h3", {}, "Analysis failed"),
                    el("p", {}, err.errorDetail)));
            } else {
                host.append(el("div", { class: "error-panel" },
                    el("p", {}, errorText(err))));
            }
        });
    }

    private renderResultsDocument(host: HTMLElement,
                                  doc: ResultsDocumentJson): void {
        const charts = el("div", { class: "chart-grid" });
        charts.append(chartCard(svgForest(buildForestRows(doc.estimates),
                                          this.kind === "survival" ? 1 : 0),
                                "forest.png"));
        for (const method of Object.keys(doc.propensity_histograms).sort()) {
            const hist = doc.propensity_histograms[method];
            charts.append(chartCard(
                svgHistogram(histogramBars(hist), {
                    title: `${method} propensity by arm`,
                    xLabel: "propensity score",
                }),
                `propensity-${method}.png`));
        }
        host.append(charts);

        host.append(el("h3", {}, "Cross-validated model metrics"));
        const metrics = el("table", { class: "stats" },
            el("tr", {},
               ...["Model", "Metric", "Mean", "SD", "Min", "Max"].map(
                   (h) => el("th", {}, h))));
        for (const row of buildMetricRows(doc.cv_summaries)) {
            metrics.append(el("tr", {},
                el("td", {}, row.model),
                el("td", {}, row.metric),
                el("td", {}, row.mean),
                el("td", {}, row.sd),
                el("td", {}, row.min),
                el("td", {}, row.max)));
            for (const w of row.warnings) {
                metrics.append(el("tr", { class: "warning" },
                    el("td", { colspan: "6" }, `${row.model}: ${w}`)));
            }
        }
        host.append(metrics);

        const calCharts = el("div", { class: "chart-grid" });
        for (const model of Object.keys(doc.calibration).sort()) {
            const cal = doc.calibration[model];
            if (!cal) continue;
            calCharts.append(chartCard(
                svgCalibration(calibrationPoints(cal), cal.brier)
                    .replace("Calibration",
                             `${model} calibration`),
                `calibration-${model}.png`));
        }
        if (calCharts.childNodes.length) {
            host.append(el("h3", {}, "Calibration"), calCharts);
        }

        if (doc.survival) {
            this.renderSurvival(host, doc.survival);
        }

        if (doc.notes.length) {
            host.append(el("h3", {}, "Notes"),
                        el("ul", { class: "notes" },
                           ...doc.notes.map((n) => el("li", {}, n))));
        }
        host.append(el("p", { class: "provenance" },
            `seed ${doc.provenance.seed}, engine ${doc.provenance.version}`));
    }

    private renderSurvival(host: HTMLElement,
                           block: SurvivalBlockJson): void {
        host.append(el("h3", {}, "Survival"));
        const unit = block.time_unit;

        const km = svgStepCurves([
            {
                label: "treated", color: TREATED_COLOR,
                grid: block.km_treated.time_grid,
                values: block.km_treated.values,
                ciLow: block.km_treated.ci_low,
                ciHigh: block.km_treated.ci_high,
                startAtOne: true,
            },
            {
                label: "control", color: CONTROL_COLOR,
                grid: block.km_control.time_grid,
                values: block.km_control.values,
                ciLow: block.km_control.ci_low,
                ciHigh: block.km_control.ci_high,
                startAtOne: true,
            },
        ], {
            title: "Weighted Kaplan-Meier", xLabel: `time (${unit})`,
            yLabel: "survival", yDomain: [0, 1.02],
        });

        const ate = svgStepCurves([{
            label: "S1(t) - S0(t)", color: "#5a3a8a",
            grid: block.ate.time_grid,
            values: block.ate.values,
            ciLow: block.ate.ci_low,
            ciHigh: block.ate.ci_high,
        }], {
            title: "Survival difference", xLabel: `time (${unit})`,
            yLabel: "difference",
        });

        const readout = el("p", { class: "hover-readout" },
                           "hover over the curve for a readout");
        const charts = el("div", { class: "chart-grid" },
            this.hoverCard(km, block, unit, readout, "kaplan-meier.png"),
            this.hoverCard(ate, block, unit, readout, "survival-ate.png"));
        host.append(charts, readout);

        const cox = block.cox;
        host.append(el("h3", {}, "Cox proportional hazards"));
        const table = el("table", { class: "stats" },
            el("tr", {}, ...["Covariate", "HR", "log HR", "SE", "p"].map(
                (h) => el("th", {}, h))));
        cox.covariates.forEach((name, i) => {
            table.append(el("tr", {},
                el("td", {}, name),
                el("td", {}, cox.hazard_ratios[i].toFixed(4)),
                el("td", {}, cox.beta[i].toFixed(4)),
                el("td", {}, cox.se[i].toFixed(4)),
                el("td", {}, formatP(cox.p_values[i]))));
        });
        host.append(table, el("p", { class: "note" }, cox.caveat));
    }

    // Wires mousemove on an inserted step chart to the shared readout
    // line; positions convert through the chart's x scale, then the step
    // lookup pulls the API values.
    private hoverCard(chart: StepChart, block: SurvivalBlockJson,
                      unit: string, readout: HTMLElement,
                      filename: string): HTMLElement {
        const card = chartCard(chart.svg, filename);
        const body = card.querySelector(".chart-body") as HTMLElement;
        const svg = body.querySelector("svg");
        if (svg) {
            svg.addEventListener("mousemove", (ev: MouseEvent) => {
                const rect = svg.getBoundingClientRect();
                const px = (ev.clientX - rect.left) * chart.width / rect.width;
                let t = scaleInvert(chart.x, px);
                t = Math.max(chart.x.d0, Math.min(chart.x.d1, t));
                readout.textContent =
                    formatHover(hoverReadout(block.ate, t), unit);
            });
        }
        return card;
    }
}

// ----------------------------------------------------------- top level

function boot(): void {
    const root = document.getElementById("app");
    if (!root) return;
    // ?api=http://localhost:8000 points the page at a service running
    // elsewhere; the default assumes same-origin deployment.
    const base = new URLSearchParams(window.location.search).get("api") ?? "";
    const client = new Client(base);
    const kinds: AnalysisKind[] = ["binary", "continuous", "survival"];
    const dashboards = new Map<AnalysisKind, Dashboard>();
    const sectionHost = el("div", {});
    const nav = el("nav", { class: "top-nav" });
    const buttons = new Map<AnalysisKind, HTMLButtonElement>();

    const activate = (kind: AnalysisKind) => {
        for (const [k, button] of buttons) {
            button.classList.toggle("active", k === kind);
        }
        clear(sectionHost);
        let dash = dashboards.get(kind);
        if (!dash) {
            dash = new Dashboard(kind, client);
            dashboards.set(kind, dash);
        }
        sectionHost.append(dash.root);
    };

    for (const kind of kinds) {
        const button = el("button", {
            class: "nav-button",
            onclick: () => activate(kind),
        }, `${kind} outcome`) as HTMLButtonElement;
        buttons.set(kind, button);
        nav.append(button);
    }
    root.append(el("header", {},
                   el("h1", {}, "Treatment Effect Dashboard"), nav),
                sectionHost);
    activate("binary");
}

if (typeof document !== "undefined") {
    boot();
}
