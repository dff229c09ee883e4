/**
 * Schema-driven run form: one typed field per InputSchema parameter.
 *
 * Generation is purely descriptor-driven, so new analyzers show up with
 * zero UI changes. Required fields carry a marker and block submission
 * with an inline message until filled.
 */

import type { AnalyzerDescriptor, SchemaParam } from "./api.js";

const NUMBER_TAGS = new Set(["INT", "FLOAT", "TIMESTAMP"]);

export interface RunFormOptions {
  prefill?: Record<string, string>;
  onSubmit: (inputs: Record<string, string>) => void;
}

function inputFor(param: SchemaParam, prefill?: string): HTMLInputElement {
  const input = document.createElement("input");
  input.name = param.name;
  input.dataset.tag = param.tag;
  if (param.tag === "BOOL") {
    input.type = "checkbox";
    const initial = prefill ?? (param.default === null ? "" : String(param.default));
    input.checked = initial === "true" || initial === "True";
  } else {
    input.type = NUMBER_TAGS.has(param.tag) ? "number" : "text";
    if (param.tag === "FLOAT") input.step = "any";
    if (prefill !== undefined) {
      input.value = prefill;
    } else if (param.default !== null && param.default !== undefined) {
      input.value = Array.isArray(param.default)
        ? (param.default as unknown[]).join(",")
        : String(param.default);
    }
    if (param.tag === "STRING_LIST") input.placeholder = "comma,separated,values";
  }
  if (param.required) input.required = true;
  return input;
}

export function buildRunForm(
  descriptor: AnalyzerDescriptor,
  options: RunFormOptions,
): HTMLFormElement {
  const form = document.createElement("form");
  form.className = "run-form";
  form.noValidate = true;

  for (const param of descriptor.input_schema.params) {
    const row = document.createElement("label");
    row.className = "field";
    const caption = document.createElement("span");
    caption.className = "field-name";
    caption.textContent = param.required ? `${param.name} *` : param.name;
    if (param.description) caption.title = param.description;
    const error = document.createElement("span");
    error.className = "field-error";
    row.append(caption, inputFor(param, options.prefill?.[param.name]), error);
    form.append(row);
  }

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Run analysis";
  form.append(submit);

  const refresh = () => {
    let ok = true;
    for (const param of descriptor.input_schema.params) {
      const input = form.elements.namedItem(param.name) as HTMLInputElement;
      const error = input.parentElement!.querySelector(".field-error")!;
      if (param.required && input.type !== "checkbox" && input.value.trim() === "") {
        error.textContent = "required";
        ok = false;
      } else {
        error.textContent = "";
      }
    }
    submit.disabled = !ok;
    return ok;
  };
  form.addEventListener("input", refresh);
  refresh();

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!refresh()) return;
    options.onSubmit(collectInputs(form, descriptor));
  });
  return form;
}

export function collectInputs(
  form: HTMLFormElement,
  descriptor: AnalyzerDescriptor,
): Record<string, string> {
  const inputs: Record<string, string> = {};
  for (const param of descriptor.input_schema.params) {
    const input = form.elements.namedItem(param.name) as HTMLInputElement;
    if (param.tag === "BOOL") {
      inputs[param.name] = input.checked ? "true" : "false";
    } else if (input.value.trim() !== "") {
      inputs[param.name] = input.value.trim();
    }
  }
  return inputs;
}
