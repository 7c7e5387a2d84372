let noop: Function = () => {};
noop.call(null);
let label: string = "x";
label.concat("y");
let attempts: number = 0;
attempts += 1;
attempts.toFixed();
let active: boolean = false;
active.toString();
