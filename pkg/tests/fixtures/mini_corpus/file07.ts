let mystery: Token = readToken();
mystery.advance();
let sig: string = "x";
mystery.check(sig);
let retry: boolean = true;
retry.valueOf();
