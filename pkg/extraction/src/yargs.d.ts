// yargs 18 ships no type declarations for its NodeNext entry points, so the
// small surface this package touches is declared here.

declare module 'yargs' {
    export interface OptionSpec {
        type: 'string' | 'number' | 'boolean';
        demandOption?: boolean;
        default?: string | number | boolean;
        describe?: string;
    }

    export interface Argv {
        scriptName(name: string): Argv;
        command(
            command: string,
            description: string,
            builder: (y: Argv) => Argv,
            handler: (args: Record<string, unknown>) => void,
        ): Argv;
        option(name: string, spec: OptionSpec): Argv;
        demandCommand(min: number, message: string): Argv;
        strict(): Argv;
        exitProcess(enabled: boolean): Argv;
        fail(handler: (message: string, error: Error | undefined) => void): Argv;
        parseSync(): Record<string, unknown>;
    }

    function yargs(argv: string[]): Argv;
    export default yargs;
}

declare module 'yargs/helpers' {
    export function hideBin(argv: string[]): string[];
}
